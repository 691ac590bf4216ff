import io
import time

import numpy as np
import pytest

from ecgcrypt import ingest
from ecgcrypt.exceptions import ConfigError, ReplayError
from ecgcrypt.ingest import (
    SEGMENT_SIZE, FileSource, Segment, Segmenter, SynthConfig, SynthSource, beat_schedule, bytes_to_segment,
    center, center_array, read_rpeaks, read_signal, replay, rpeaks_path, segment_timestamp, segment_to_bytes,
    segmentize, synth_ecg, write_rpeaks, write_signal,
)

from .common import synth_raw


def test_center():
    assert center(128) == 0
    assert center(0) == -128
    assert center(255) == 127
    with pytest.raises(ValueError):
        center(256)


def test_center_bijection():
    raw = np.arange(256)
    centered = center_array(raw)
    assert centered.min() == -128 and centered.max() == 127
    assert np.array_equal(centered + 128, raw)


def test_twos_complement():
    samples = np.array([-128, -1, 0, 1, 127])
    assert segment_to_bytes(samples) == bytes([0x80, 0xFF, 0x00, 0x01, 0x7F])
    assert np.array_equal(bytes_to_segment(segment_to_bytes(samples)), samples)


def test_segment_length():
    with pytest.raises(ValueError):
        Segment(0, 0, np.zeros(299, dtype=np.int16))


@pytest.mark.parametrize('n, count, pending', [(600, 2, 0), (299, 0, 299), (301, 1, 1), (0, 0, 0), (1000, 3, 100)])
def test_segmenter_counts(n, count, pending):
    segmenter = Segmenter(500)
    segments = segmenter.feed(np.full(n, 128, dtype=np.uint8))
    assert len(segments) == count
    assert segmenter.pending == pending


def test_segmentize():
    raw = np.arange(600) % 256
    segments = list(segmentize(iter(raw.tolist()), 500))
    assert [s.seq for s in segments] == [0, 1]
    assert [s.timestamp_ms for s in segments] == [0, 600]
    assert np.array_equal(segments[1].samples, center_array(raw[300:]))


def test_segmenter_chunking():
    raw = np.random.default_rng(2).integers(0, 256, 1234)
    segmenter = Segmenter(500)
    chunked = []
    for lo in range(0, raw.size, 77):
        chunked.extend(segmenter.feed(raw[lo:lo + 77]))
    whole = list(segmentize(iter(raw.tolist()), 500))
    assert len(chunked) == len(whole) == 4
    for a, b in zip(chunked, whole):
        assert a.seq == b.seq
        assert np.array_equal(a.samples, b.samples)


def test_segment_timestamp():
    assert segment_timestamp(3, 500) == 1800
    assert segment_timestamp(1, 360) == 833
    with pytest.raises(ConfigError):
        Segmenter(0)


class TestSynth:

    def test_peak_count(self):
        raw, rpeaks = synth_ecg(SynthConfig(noise_std=0.0, seed=1, duration_s=10.0))
        assert raw.size == 5000
        assert len(rpeaks) == 12
        assert np.all(np.abs(np.diff(rpeaks) - 416.67) <= 1)
        assert np.array_equal(rpeaks, beat_schedule(SynthConfig(duration_s=10.0)))

    def test_span(self):
        raw, rpeaks = synth_raw(10.0, noise_std=0.0)
        assert raw.min() == 64
        assert raw.max() == 192
        assert np.all(raw[rpeaks] == 192)

    def test_deterministic(self):
        a, _ = synth_raw(5.0, noise_std=3.0, seed=4)
        b, _ = synth_raw(5.0, noise_std=3.0, seed=4)
        c, _ = synth_raw(5.0, noise_std=3.0, seed=5)
        assert np.array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_empty(self):
        raw, rpeaks = synth_ecg(SynthConfig(duration_s=0))
        assert raw.size == 0
        assert rpeaks.size == 0

    @pytest.mark.parametrize('kwargs', [dict(fs_hz=0), dict(heart_rate_bpm=29), dict(heart_rate_bpm=221),
                                        dict(noise_std=-1), dict(duration_s=-1)])
    def test_config_validation(self, kwargs):
        with pytest.raises(ConfigError):
            SynthConfig(**kwargs)

    def test_source(self):
        source = SynthSource(SynthConfig(duration_s=10.0, seed=2))
        segments = list(source.segments())
        assert len(segments) == 16
        assert segments[-1].seq == 15
        assert np.array_equal(segments[0].samples, center_array(source.raw[:SEGMENT_SIZE]))


class TestFiles:

    def test_signal_roundtrip(self, tmp_path):
        raw, rpeaks = synth_raw(2.0)
        path = tmp_path / 'ecg.bin'
        write_signal(path, raw)
        write_rpeaks(rpeaks_path(path), rpeaks)
        assert path.stat().st_size == raw.size
        assert np.array_equal(read_signal(path), raw)
        assert np.array_equal(read_rpeaks(rpeaks_path(path)), rpeaks)
        assert rpeaks_path(path).read_text().endswith('\n')

    def test_replay(self, tmp_path):
        path = tmp_path / 'three.bin'
        path.write_bytes(bytes([0x80, 0x00, 0xFF]))
        assert list(replay(path)) == [128, 0, 255]

    def test_replay_empty(self, tmp_path):
        path = tmp_path / 'empty.bin'
        path.write_bytes(b'')
        assert list(replay(path)) == []

    def test_replay_missing(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            replay(tmp_path / 'missing.bin')

    def test_paced(self, tmp_path):
        path = tmp_path / 'paced.bin'
        path.write_bytes(bytes(100))
        start = time.monotonic()
        assert len(list(FileSource(path, fs_hz=1000, paced=True))) == 100
        assert time.monotonic() - start >= 0.09

    def test_read_error(self, tmp_path, monkeypatch):
        path = tmp_path / 'broken.bin'
        path.write_bytes(bytes(10))

        class Broken(io.BytesIO):
            def read(self, size=-1):
                if self.tell() > 0:
                    raise OSError('device disconnected')
                return super().read(5)

        monkeypatch.setattr(ingest, 'open', lambda *args: Broken(bytes(10)), raising=False)
        received = []
        with pytest.raises(ReplayError):
            for value in FileSource(path):
                received.append(value)
        assert received == [0] * 5
