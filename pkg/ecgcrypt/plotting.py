"""
Plot data for the signal views: an aligned per-sample CSV and static SVG
renderings of the raw, filtered, encrypted and decrypted traces and of byte
histograms.
"""
import csv
from collections import OrderedDict
from pathlib import Path

import numpy as np
from jinja2 import Environment, PackageLoader

from ecgcrypt.beats import bandpass_filter
from ecgcrypt.cipher import encrypt_segments
from ecgcrypt.ingest import DEFAULT_FS, MIDSCALE, SEGMENT_SIZE, bytes_to_segment, center_array, segment_to_bytes

template_env = Environment(
    loader=PackageLoader('ecgcrypt', 'templates'),
    autoescape=True,
)

SIGNAL_COLUMNS = ('index', 'raw', 'filtered', 'encrypted', 'decrypted')
COLORS = {
    'raw': '#1f77b4',
    'filtered': '#2ca02c',
    'encrypted': '#d62728',
    'decrypted': '#9467bd',
}
MARGIN = 24
WIDTH = 900
PANEL_HEIGHT = 120
PANEL_GAP = 28


def signal_table(raw, key, config=None, fs_hz=DEFAULT_FS, segment_size=SEGMENT_SIZE):
    """Aligned columns of one recording.

    ``encrypted`` holds the ciphertext bytes (per-segment keystream resets, as on
    the wire) and ``decrypted`` the raw values recovered from them.
    """
    raw = np.asarray(raw, dtype=np.uint8)
    centered = center_array(raw)
    ciphertext = encrypt_segments(segment_to_bytes(centered), key, config, segment_size)
    recovered = bytes_to_segment(encrypt_segments(ciphertext, key, config, segment_size)) + MIDSCALE
    return OrderedDict([
        ('index', np.arange(raw.size)),
        ('raw', raw.astype(np.int64)),
        ('filtered', bandpass_filter(centered, fs_hz)),
        ('encrypted', np.frombuffer(ciphertext, dtype=np.uint8).astype(np.int64)),
        ('decrypted', recovered.astype(np.int64)),
    ])


def write_signal_csv(path, table):
    with open(Path(path), 'w', newline='') as fp:
        writer = csv.writer(fp)
        writer.writerow(SIGNAL_COLUMNS)
        for row in zip(*(table[name] for name in SIGNAL_COLUMNS)):
            writer.writerow([
                '{:.6f}'.format(value) if isinstance(value, (float, np.floating)) else int(value)
                for value in row
            ])


def _polyline(values, width, height):
    y = np.asarray(values, dtype=np.float64)
    if y.size == 0:
        return ''
    low, high = y.min(), y.max()
    span = high - low if high > low else 1.0
    xs = MARGIN + np.linspace(0.0, width, y.size) if y.size > 1 else np.array([MARGIN + width / 2.0])
    ys = height - (y - low) / span * height
    return ' '.join('{:.2f},{:.2f}'.format(a, b) for a, b in zip(xs, ys))


def render_line_svg(series, title='ECG signal'):
    """Stacked line panels sharing one sample axis, one per ``(name, values)`` entry."""
    plot_width = WIDTH - 2 * MARGIN
    panels = []
    for k, (name, values) in enumerate(series.items()):
        values = np.asarray(values, dtype=np.float64)
        panels.append({
            'name': name,
            'top': 2 * MARGIN + k * (PANEL_HEIGHT + PANEL_GAP),
            'low': '{:g}'.format(values.min()) if values.size else '',
            'high': '{:g}'.format(values.max()) if values.size else '',
            'color': COLORS.get(name, '#333333'),
            'points': _polyline(values, plot_width, PANEL_HEIGHT),
        })
    height = 2 * MARGIN + len(panels) * (PANEL_HEIGHT + PANEL_GAP)
    return template_env.get_template('line.svg.j2').render(
        title=title, width=WIDTH, height=height, margin=MARGIN,
        plot_width=plot_width, panel_height=PANEL_HEIGHT, panels=panels,
    )


def render_histogram_svg(counts, title='Byte histogram', color='#1f77b4'):
    """One bar per byte value; ``counts`` must hold 256 entries."""
    counts = np.asarray(counts, dtype=np.int64)
    if counts.shape != (256,):
        raise ValueError("a byte histogram has 256 counts, got shape {}".format(counts.shape))
    plot_width, plot_height = WIDTH - 2 * MARGIN, 300
    bar_width = plot_width / 256.0
    peak = int(counts.max())
    scale = plot_height / peak if peak else 0.0
    bars = []
    for value, count in enumerate(counts):
        h = count * scale
        bars.append({
            'value': value, 'count': int(count),
            'x': '{:.3f}'.format(value * bar_width),
            'y': '{:.3f}'.format(plot_height - h),
            'h': '{:.3f}'.format(h),
        })
    return template_env.get_template('histogram.svg.j2').render(
        title=title, width=WIDTH, height=plot_height + 3 * MARGIN, margin=MARGIN, top=2 * MARGIN - 8,
        plot_width=plot_width, plot_height=plot_height, bar_width='{:.3f}'.format(bar_width),
        bars=bars, peak=peak, color=color,
    )


def write_svg(path, text):
    Path(path).write_text(text)
    return Path(path)
