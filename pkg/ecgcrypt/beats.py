"""
Filtering, normalization, R-peak detection and beat extraction.

Detection runs on the filtered signal (5-point moving average followed by a
first difference, so its maxima sit on the steepest R upslope) and each
detection is then moved to the apex of the unfiltered signal nearby.
Beats are 180-sample windows, 90 samples before the R apex and 90 at and
after it. Windows crossing a boundary are skipped, never padded.
"""
import logging
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ecgcrypt.exceptions import ConfigError, DatasetError, DegenerateSegment, OutOfBounds

LOGGER = logging.getLogger(__name__)

BEAT_LENGTH = 180
HALF_BEAT = BEAT_LENGTH // 2
SMOOTH_WIDTH = 5
REFRACTORY_S = 0.2
INIT_WINDOW_S = 2.0
INIT_FRACTION = 0.6
THRESHOLD_FRACTION = 0.5
RUNNING_PEAKS = 8
SEARCH_S = 0.05
MIN_STD = 1e-12


@dataclass(frozen=True)
class NormalizedSegment:
    values: np.ndarray = field(repr=False, compare=False)
    source_seq: int = None


@dataclass(frozen=True)
class Beat:
    samples: np.ndarray = field(repr=False, compare=False)
    r_index: int
    source_seq: int = None

    def __post_init__(self):
        if len(self.samples) != BEAT_LENGTH:
            raise ValueError("a beat holds exactly {} samples, got {}".format(BEAT_LENGTH, len(self.samples)))


def _check_fs(fs_hz):
    if not fs_hz > 0:
        raise ConfigError("sampling rate must be positive, got {}".format(fs_hz))


def moving_average(values, width=SMOOTH_WIDTH):
    """Centered moving average; windows shrink at both ends so the length is kept."""
    x = np.asarray(values, dtype=np.float64)
    n = x.size
    half = width // 2
    csum = np.concatenate(([0.0], np.cumsum(x)))
    idx = np.arange(n)
    lo = np.maximum(idx - half, 0)
    hi = np.minimum(idx + half + 1, n)
    return (csum[hi] - csum[lo]) / (hi - lo)


def bandpass_filter(values, fs_hz):
    """Moving average cascaded with first-difference baseline removal.

    ``y[0]`` is 0; a constant input gives an all-zero output.
    """
    _check_fs(fs_hz)
    smoothed = moving_average(values)
    if smoothed.size == 0:
        return smoothed
    return np.concatenate(([0.0], np.diff(smoothed)))


def require_spread(values):
    """Population standard deviation of ``values``; :class:`DegenerateSegment` when flat or too short."""
    x = np.asarray(values, dtype=np.float64)
    if x.size < 2:
        raise DegenerateSegment("at least 2 values are needed to normalize, got {}".format(x.size))
    std = x.std()
    if std < MIN_STD:
        raise DegenerateSegment("flat signal (std={:.3g})".format(std))
    return std


def zscore(values):
    x = np.asarray(values, dtype=np.float64)
    std = require_spread(x)
    return (x - x.mean()) / std


def normalize(values, source_seq=None):
    """Subtract the mean and divide by the population standard deviation."""
    return NormalizedSegment(zscore(values), source_seq)


def detect_rpeaks(values, fs_hz, initial_threshold=None):
    """Adaptive-threshold peak picking with a 200 ms refractory period.

    A local maximum is accepted when it exceeds the threshold, initially
    ``0.6 * max(first 2 s)`` and afterwards half the mean of the last 8
    accepted amplitudes. Inside the refractory period only the larger of two
    peaks is kept.

    Returns
    -------
    ndarray of int64
      Strictly increasing sample indices.
    """
    _check_fs(fs_hz)
    x = np.asarray(values, dtype=np.float64)
    if x.size < 3:
        return np.array([], dtype=np.int64)
    refractory = int(round(REFRACTORY_S * fs_hz))
    if initial_threshold is None:
        initial_threshold = INIT_FRACTION * x[:max(1, int(INIT_WINDOW_S * fs_hz))].max()

    candidates = np.flatnonzero((x[1:-1] > x[:-2]) & (x[1:-1] >= x[2:])) + 1
    peaks = []
    amplitudes = deque(maxlen=RUNNING_PEAKS)
    threshold = initial_threshold
    for i in candidates:
        if x[i] <= threshold:
            continue
        if peaks and i - peaks[-1] < refractory:
            if x[i] > x[peaks[-1]]:
                peaks[-1] = i
                amplitudes[-1] = x[i]
                threshold = THRESHOLD_FRACTION * np.mean(amplitudes)
            continue
        peaks.append(i)
        amplitudes.append(x[i])
        threshold = THRESHOLD_FRACTION * np.mean(amplitudes)
    return np.array(peaks, dtype=np.int64)


def refine_rpeaks(values, indices, fs_hz, search_s=SEARCH_S):
    """Move each index to the maximum of ``values`` within ``search_s`` seconds."""
    x = np.asarray(values, dtype=np.float64)
    reach = int(round(search_s * fs_hz))
    refined = np.empty(len(indices), dtype=np.int64)
    for k, i in enumerate(indices):
        lo, hi = max(0, i - reach), min(x.size, i + reach + 1)
        refined[k] = lo + int(np.argmax(x[lo:hi]))
    return refined


def locate_rpeaks(values, fs_hz, initial_threshold=None):
    """Filter, detect, and refine R peaks in an unfiltered signal."""
    filtered = bandpass_filter(values, fs_hz)
    found = detect_rpeaks(filtered, fs_hz, initial_threshold)
    refined = refine_rpeaks(values, found, fs_hz)
    if refined.size == 0:
        return refined
    # two detections may settle on the same apex
    return refined[np.concatenate(([True], np.diff(refined) > 0))]


def extract_beat(values, r_index, source_seq=None, offset=0):
    """Return the window ``[r_index - 90, r_index + 90)``.

    ``offset`` is the absolute index of ``values[0]``; the returned beat
    carries the absolute R index.
    """
    x = np.asarray(values, dtype=np.float64)
    lo, hi = r_index - HALF_BEAT, r_index + HALF_BEAT
    if lo < 0 or hi > x.size:
        raise OutOfBounds("beat window [{}, {}) exceeds [0, {})".format(lo, hi, x.size))
    return Beat(x[lo:hi].copy(), int(offset + r_index), source_seq)


def prepare_beat(samples):
    """Classifier input: the beat window z-scored on its own."""
    return zscore(samples)


class BeatTracker:
    """Extract beats from consecutive segments.

    Detection runs over the last ``context`` segments so a beat whose window
    straddles a segment boundary is still found once the next segment arrives.
    Each beat is reported once, by absolute R index.
    """

    def __init__(self, fs_hz, context=2):
        _check_fs(fs_hz)
        self.fs_hz = fs_hz
        self.refractory = int(round(REFRACTORY_S * fs_hz))
        self._segments = deque(maxlen=context)
        self._amplitudes = deque(maxlen=RUNNING_PEAKS)
        self._last_seq = None
        self._last_r = None

    def reset(self):
        self._segments.clear()
        self._last_seq = None

    def update(self, seq, samples, start_index):
        if self._last_seq is not None and seq != self._last_seq + 1:
            LOGGER.warning("segment gap before seq %d, restarting beat context", seq)
            self.reset()
        self._last_seq = seq
        self._segments.append((start_index, np.asarray(samples, dtype=np.float64)))

        offset = self._segments[0][0]
        context = np.concatenate([s for _, s in self._segments])
        filtered = bandpass_filter(context, self.fs_hz)
        threshold = THRESHOLD_FRACTION * np.mean(self._amplitudes) if self._amplitudes else None
        found = detect_rpeaks(filtered, self.fs_hz, threshold)

        beats = []
        for f, r in zip(found, refine_rpeaks(context, found, self.fs_hz)):
            absolute = offset + int(r)
            if self._last_r is not None and absolute - self._last_r < self.refractory:
                continue
            try:
                beat = extract_beat(context, int(r), seq, offset)
            except OutOfBounds:
                # the next segment completes it, unless the stream ends first
                continue
            self._amplitudes.append(filtered[f])
            self._last_r = absolute
            beats.append(beat)
        return beats


def write_beats(path, beats):
    """Beat file: one window per line, comma-separated values."""
    with open(Path(path), 'w') as fp:
        for beat in beats:
            samples = getattr(beat, 'samples', beat)
            fp.write(','.join(repr(float(v)) for v in samples) + '\n')


def read_beats(path, length=BEAT_LENGTH):
    rows = []
    with open(Path(path)) as fp:
        for lineno, line in enumerate(fp, 1):
            line = line.strip()
            if not line:
                continue
            try:
                values = np.array(line.split(','), dtype=np.float64)
            except ValueError as e:
                raise DatasetError("{}:{}: {}".format(path, lineno, e))
            if values.size != length:
                raise DatasetError("{}:{}: {} values, a beat holds {}".format(path, lineno, values.size, length))
            rows.append(values)
    return np.array(rows).reshape(-1, length)
