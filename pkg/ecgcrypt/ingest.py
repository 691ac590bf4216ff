"""
Sample acquisition: synthetic ECG, paced file replay and 300-sample segmentation.

The preamplifier delivers one unsigned byte per sample. Samples are centered
(``raw - 128``) and grouped in segments of 300 samples; a trailing partial
group is never emitted. Raw signal files are headerless byte streams; the
synthetic generator writes a sidecar file with one R-peak sample index per line.
"""
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from boltons.iterutils import chunked_iter

from ecgcrypt.exceptions import ConfigError, ReplayError

LOGGER = logging.getLogger(__name__)

SEGMENT_SIZE = 300
MIDSCALE = 128
DEFAULT_FS = 500.0
READ_CHUNK = 4096
RPEAKS_SUFFIX = '.rpeaks'

# (offset from the R apex in s, amplitude relative to R, gaussian width in s)
PQRST_WAVES = (
    (-0.160, 0.12, 0.025),  # P
    (-0.025, -0.12, 0.008),  # Q
    (0.000, 1.00, 0.010),  # R
    (0.025, -0.22, 0.008),  # S
    (0.280, 0.30, 0.045),  # T
)
# counts spanned by one clean beat
SYNTH_RANGE = (64.0, 192.0)


def center(raw):
    """Return the centered value of a raw byte, in [-128, 127]."""
    raw = int(raw)
    if not 0 <= raw <= 255:
        raise ValueError("raw sample must fit one byte, got {}".format(raw))
    return raw - MIDSCALE


def center_array(raw):
    return np.asarray(raw, dtype=np.int16) - MIDSCALE


def segment_to_bytes(samples):
    """Two's-complement byte form of centered samples; this is the cipher plaintext."""
    return (np.asarray(samples, dtype=np.int16) & 0xFF).astype(np.uint8).tobytes()


def bytes_to_segment(data):
    return np.frombuffer(bytes(data), dtype=np.int8).astype(np.int16)


@dataclass(frozen=True)
class Segment:
    seq: int
    timestamp_ms: int
    samples: np.ndarray = field(repr=False, compare=False)

    def __post_init__(self):
        if len(self.samples) != SEGMENT_SIZE:
            raise ValueError("a segment holds exactly {} samples, got {}".format(SEGMENT_SIZE, len(self.samples)))

    def to_bytes(self):
        return segment_to_bytes(self.samples)


def segment_timestamp(seq, fs_hz, size=SEGMENT_SIZE):
    return int(round(seq * size * 1000.0 / fs_hz))


class Segmenter:
    """Streaming form of :func:`segmentize`.

    Raw samples are fed in arbitrary chunks; each completed group of 300
    becomes a :class:`Segment`. Timestamps derive from the sample count.
    """

    def __init__(self, fs_hz=DEFAULT_FS):
        if not fs_hz > 0:
            raise ConfigError("sampling rate must be positive, got {}".format(fs_hz))
        self.fs_hz = fs_hz
        self.seq = 0
        self._buffer = []

    @property
    def pending(self):
        """Number of samples held back, waiting for a full segment."""
        return len(self._buffer)

    def feed(self, raw_samples):
        segments = []
        for value in raw_samples:
            self._buffer.append(center(value))
            if len(self._buffer) == SEGMENT_SIZE:
                samples = np.array(self._buffer, dtype=np.int16)
                segments.append(Segment(self.seq, segment_timestamp(self.seq, self.fs_hz), samples))
                self.seq += 1
                self._buffer = []
        return segments


def segmentize(stream, fs_hz=DEFAULT_FS):
    """Group a raw sample stream in segments of 300 centered samples."""
    segmenter = Segmenter(fs_hz)
    for chunk in chunked_iter(stream, SEGMENT_SIZE):
        yield from segmenter.feed(chunk)
    if segmenter.pending:
        LOGGER.debug("dropping %d trailing samples", segmenter.pending)


@dataclass(frozen=True)
class SynthConfig:
    fs_hz: float = DEFAULT_FS
    heart_rate_bpm: float = 72.0
    noise_std: float = 2.0
    seed: int = 0
    duration_s: float = 10.0

    def __post_init__(self):
        if not self.fs_hz > 0:
            raise ConfigError("fs_hz must be positive, got {}".format(self.fs_hz))
        if not 30 <= self.heart_rate_bpm <= 220:
            raise ConfigError("heart_rate_bpm must be in [30, 220], got {}".format(self.heart_rate_bpm))
        if not self.noise_std >= 0:
            raise ConfigError("noise_std must be nonnegative, got {}".format(self.noise_std))
        if not self.duration_s >= 0:
            raise ConfigError("duration_s must be nonnegative, got {}".format(self.duration_s))

    @property
    def n_samples(self):
        return int(round(self.duration_s * self.fs_hz))

    @property
    def rr_samples(self):
        return 60.0 * self.fs_hz / self.heart_rate_bpm


def beat_schedule(config):
    """R-peak sample indices of the generator: first beat at half an RR interval."""
    n = config.n_samples
    rr = config.rr_samples
    count = int(np.ceil((n - rr / 2.0) / rr)) if n > rr / 2.0 else 0
    peaks = np.rint(rr / 2.0 + rr * np.arange(count)).astype(np.int64)
    return peaks[peaks < n]


def render_beats(n, rpeaks, fs_hz, waves=PQRST_WAVES):
    """Sum of gaussian PQRST bumps, unit R amplitude, around each R index."""
    signal = np.zeros(n)
    if n == 0:
        return signal
    reach = int(np.ceil(0.6 * fs_hz))
    for r in rpeaks:
        lo, hi = max(0, r - reach), min(n, r + reach + 1)
        t = (np.arange(lo, hi) - r) / fs_hz
        for offset, amplitude, width in waves:
            signal[lo:hi] += amplitude * np.exp(-0.5 * ((t - offset) / width) ** 2)
    return signal


def synth_scale(fs_hz, waves=PQRST_WAVES):
    """Baseline and gain mapping an isolated clean beat onto SYNTH_RANGE."""
    reach = int(np.ceil(0.6 * fs_hz))
    beat = render_beats(2 * reach + 1, [reach], fs_hz, waves)
    lo, hi = SYNTH_RANGE
    gain = (hi - lo) / (beat.max() - beat.min())
    return lo - gain * beat.min(), gain


def synth_ecg(config):
    """Synthesize ``s(t) = V_ECG(t) + N(t)`` as raw bytes.

    Returns
    -------
    raw : ndarray of uint8
    rpeaks : ndarray of int64
      R-peak sample indices used during synthesis.
    """
    n = config.n_samples
    rpeaks = beat_schedule(config)
    baseline, gain = synth_scale(config.fs_hz)
    clean = baseline + gain * render_beats(n, rpeaks, config.fs_hz)
    rng = np.random.default_rng(config.seed)
    noise = rng.normal(0.0, config.noise_std, n) if config.noise_std > 0 else np.zeros(n)
    raw = np.clip(np.rint(clean + noise), 0, 255).astype(np.uint8)
    return raw, rpeaks


def write_signal(path, raw):
    Path(path).write_bytes(np.asarray(raw, dtype=np.uint8).tobytes())


def read_signal(path):
    return np.frombuffer(Path(path).read_bytes(), dtype=np.uint8)


def rpeaks_path(signal_path):
    return Path(str(signal_path) + RPEAKS_SUFFIX)


def write_rpeaks(path, rpeaks):
    Path(path).write_text(''.join('{}\n'.format(int(i)) for i in rpeaks))


def read_rpeaks(path):
    return np.array([int(line) for line in Path(path).read_text().split()], dtype=np.int64)


class SampleSource:
    """A single-consumer stream of raw samples at ``fs_hz``.

    Subclasses implement :meth:`__iter__`; a serial-port source would be one more.
    """
    name = None

    def __init__(self, fs_hz=DEFAULT_FS):
        if not fs_hz > 0:
            raise ConfigError("sampling rate must be positive, got {}".format(fs_hz))
        self.fs_hz = fs_hz

    def __iter__(self):
        raise NotImplementedError

    def segments(self):
        return segmentize(iter(self), self.fs_hz)


class SynthSource(SampleSource):
    name = 'synth'

    def __init__(self, config):
        super().__init__(config.fs_hz)
        self.config = config
        self.raw, self.rpeaks = synth_ecg(config)

    def __iter__(self):
        return iter(self.raw.tolist())


class FileSource(SampleSource):
    """Replay a headerless signal file, one sample per byte.

    When ``paced``, delivery follows the sample clock (1 / fs_hz per sample).
    """
    name = 'file'

    def __init__(self, path, fs_hz=DEFAULT_FS, paced=False):
        super().__init__(fs_hz)
        self.path = Path(path)
        if not self.path.is_file():
            raise FileNotFoundError("signal file not found: {}".format(self.path))
        self.paced = paced

    def __iter__(self):
        start = time.monotonic()
        index = 0
        with open(self.path, 'rb') as fp:
            while True:
                try:
                    chunk = fp.read(READ_CHUNK)
                except OSError as e:
                    LOGGER.error("read error in %s after %d samples: %s", self.path, index, e)
                    raise ReplayError("read error in {} after {} samples: {}".format(self.path, index, e)) from e
                if not chunk:
                    break
                for value in chunk:
                    if self.paced:
                        delay = start + index / self.fs_hz - time.monotonic()
                        if delay > 0:
                            time.sleep(delay)
                    index += 1
                    yield value


def replay(path, fs_hz=DEFAULT_FS, paced=False):
    """Return an iterator of raw samples read from ``path``."""
    return iter(FileSource(path, fs_hz, paced))
