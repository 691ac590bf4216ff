import csv
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from ecgcrypt.cipher import encrypt_segments
from ecgcrypt.ingest import center_array, segment_to_bytes
from ecgcrypt.plotting import (
    SIGNAL_COLUMNS, render_histogram_svg, render_line_svg, signal_table, write_signal_csv, write_svg,
)
from ecgcrypt.security import histogram256

from .common import DEFAULT_KEY, synth_raw

SVG = '{http://www.w3.org/2000/svg}'


@pytest.fixture(scope='module')
def table():
    raw, _ = synth_raw(2.0, seed=4)
    return raw, signal_table(raw, DEFAULT_KEY)


def test_signal_table(table):
    raw, columns = table
    assert tuple(columns) == SIGNAL_COLUMNS
    assert all(len(v) == raw.size for v in columns.values())
    assert np.array_equal(columns['decrypted'], raw)
    expected = encrypt_segments(segment_to_bytes(center_array(raw)), DEFAULT_KEY)
    assert bytes(columns['encrypted'].astype(np.uint8)) == expected
    # first keystream byte of the key is 254
    assert columns['encrypted'][0] == ((int(raw[0]) - 128) & 0xFF) ^ 254


def test_histograms_match(table):
    raw, columns = table
    assert np.array_equal(histogram256(columns['decrypted'].astype(np.uint8).tobytes()), histogram256(raw.tobytes()))


def test_signal_csv(table, tmp_path):
    raw, columns = table
    path = tmp_path / 'signal.csv'
    write_signal_csv(path, columns)
    with open(path) as fp:
        rows = list(csv.reader(fp))
    assert rows[0] == list(SIGNAL_COLUMNS)
    assert len(rows) == raw.size + 1
    assert rows[1][0] == '0'
    assert rows[5][1] == str(raw[4])
    assert len(rows[5][2].split('.')[1]) == 6


def test_line_svg(table):
    _, columns = table
    series = {name: columns[name][:300] for name in ('raw', 'filtered', 'encrypted')}
    root = ET.fromstring(render_line_svg(series, title='segment 0').encode())
    lines = root.findall('.//{}polyline'.format(SVG))
    assert len(lines) == 3
    assert all(len(line.get('points').split()) == 300 for line in lines)
    assert root.find('{}text'.format(SVG)).text == 'segment 0'


def test_line_svg_flat():
    root = ET.fromstring(render_line_svg({'raw': np.full(10, 128)}).encode())
    points = root.find('.//{}polyline'.format(SVG)).get('points').split()
    assert len(set(p.split(',')[1] for p in points)) == 1


def test_histogram_svg():
    counts = np.arange(256)
    root = ET.fromstring(render_histogram_svg(counts, title='<encrypted>').encode())
    bars = [r for r in root.iter('{}rect'.format(SVG)) if r.get('class') == 'bar']
    assert len(bars) == 256
    assert float(bars[0].get('height')) == 0.0
    assert float(bars[255].get('height')) == pytest.approx(300.0)
    assert root.find('{}text'.format(SVG)).text == '<encrypted>'


def test_histogram_escaped():
    text = render_histogram_svg(np.zeros(256), title='a & b')
    assert 'a &amp; b' in text


def test_histogram_shape():
    with pytest.raises(ValueError):
        render_histogram_svg(np.zeros(255))


def test_write_svg(tmp_path):
    path = write_svg(tmp_path / 'plot.svg', render_histogram_svg(np.ones(256)))
    assert path.read_text().startswith('<?xml')
