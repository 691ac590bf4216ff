"""
The secure processing loop: encrypt a segment, frame it, decode and decrypt
it again, then find and classify the beats it completes.

Beat detection runs on the decrypted centered samples. A segment without spread
is logged and skipped; classifier inputs are z-scored per beat, so the detector
needs no per-segment scaling.
"""
import logging
import queue
import threading
import time
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from ecgcrypt.beats import BeatTracker, prepare_beat, require_spread
from ecgcrypt.cipher import apply_stream
from ecgcrypt.exceptions import DegenerateSegment
from ecgcrypt.ingest import DEFAULT_FS, SEGMENT_SIZE, bytes_to_segment
from ecgcrypt.inference.model import CLASS_LABELS, predict_proba, to_class_probs
from ecgcrypt.transport import EncryptedFrame, FrameDecoder, is_frame

LOGGER = logging.getLogger(__name__)

QUEUE_SIZE = 8
PUT_TIMEOUT = 0.1


@dataclass(frozen=True)
class BeatResult:
    r_index: int
    source_seq: int
    label: str
    probs: np.ndarray = field(repr=False, compare=False)


@dataclass
class SegmentResult:
    seq: int
    timestamp_ms: int
    beats: list = field(default_factory=list)
    latency_ms: float = 0.0
    events: list = field(default_factory=list)
    skipped: bool = False

    @property
    def labels(self):
        return [beat.label for beat in self.beats]


@dataclass
class PipelineStats:
    segments_processed: int = 0
    beats_classified: int = 0
    latencies_ms: list = field(default_factory=list, repr=False)
    class_counts: Counter = field(default_factory=Counter)

    def record(self, result):
        self.segments_processed += 1
        self.beats_classified += len(result.beats)
        self.latencies_ms.append(result.latency_ms)
        self.class_counts.update(result.labels)

    @property
    def mean_latency_ms(self):
        return float(np.mean(self.latencies_ms)) if self.latencies_ms else 0.0

    @property
    def max_latency_ms(self):
        return float(np.max(self.latencies_ms)) if self.latencies_ms else 0.0

    def as_dict(self):
        return {
            'segments_processed': self.segments_processed,
            'beats_classified': self.beats_classified,
            'mean_latency_ms': self.mean_latency_ms,
            'max_latency_ms': self.max_latency_ms,
            'class_counts': {label: self.class_counts.get(label, 0) for label in CLASS_LABELS},
        }


class Pipeline:
    """Per-segment processing with one key and one set of weights.

    Parameters
    ----------
    key : ChaoticKey
      Shared secret of both ends.
    weights : ModelWeights
      Trained classifier.
    config : CipherConfig, optional
    fs_hz : float
      Sampling rate of the stream.
    use_transport : bool
      Send each ciphertext through the frame codec before decrypting.
    """

    def __init__(self, key, weights, config=None, fs_hz=DEFAULT_FS, use_transport=True):
        self.key = key
        self.weights = weights
        self.config = config
        self.fs_hz = fs_hz
        self.use_transport = use_transport
        self.tracker = BeatTracker(fs_hz)
        self.decoder = FrameDecoder()
        self.stats = PipelineStats()

    def encrypt(self, segment):
        return EncryptedFrame(segment.seq, segment.timestamp_ms, apply_stream(segment.to_bytes(), self.key, self.config))

    def process_segment(self, segment):
        """Run one plaintext segment through the whole loop."""
        start = time.perf_counter()
        frame = self.encrypt(segment)
        if not self.use_transport:
            return self._receive(frame, start)
        items = self.decoder.feed(frame.encode())
        frames = [item for item in items if is_frame(item)]
        events = [item for item in items if not is_frame(item)]
        if not frames:
            result = SegmentResult(segment.seq, segment.timestamp_ms, events=events, skipped=True)
            return self._finish(result, start)
        result = self._receive(frames[0], start)
        result.events = events
        return result

    def process_frame(self, frame):
        """Receiving end only: decrypt and classify a frame read off the wire."""
        return self._receive(frame, time.perf_counter())

    def classify(self, beats):
        if not beats:
            return []
        inputs = np.array([prepare_beat(beat.samples) for beat in beats])
        results = []
        for beat, probs in zip(beats, predict_proba(inputs, self.weights)):
            scored = to_class_probs(probs)
            results.append(BeatResult(beat.r_index, beat.source_seq, scored.label, scored.probs))
        return results

    def _receive(self, frame, start):
        samples = bytes_to_segment(apply_stream(frame.payload, self.key, self.config))
        result = SegmentResult(frame.seq, frame.timestamp_ms)
        try:
            require_spread(samples)
        except DegenerateSegment as e:
            LOGGER.warning("segment %d skipped: %s", frame.seq, e)
            result.skipped = True
            return self._finish(result, start)

        beats = self.tracker.update(frame.seq, samples, frame.seq * SEGMENT_SIZE)
        usable = []
        for beat in beats:
            try:
                prepare_beat(beat.samples)
            except DegenerateSegment as e:
                LOGGER.warning("beat at %d skipped: %s", beat.r_index, e)
                continue
            usable.append(beat)
        result.beats = self.classify(usable)
        return self._finish(result, start)

    def _finish(self, result, start):
        result.latency_ms = (time.perf_counter() - start) * 1000.0
        self.stats.record(result)
        LOGGER.info("seq %d: %d beats %s in %.2f ms", result.seq, len(result.beats),
                    ','.join(result.labels) or '-', result.latency_ms)
        return result

    def run(self, segments, queue_size=QUEUE_SIZE):
        return run_stream(segments, self.process_segment, queue_size)


class _Failure:

    def __init__(self, error):
        self.error = error


_DONE = object()


def run_stream(items, handler, queue_size=QUEUE_SIZE):
    """Yield ``handler(item)`` for each item, in order.

    Items are pulled from ``items`` by a producer thread into a bounded queue,
    so a paced source keeps reading while the previous segment is processed.
    An exception raised by the producer is re-raised here.
    """
    buffer = queue.Queue(maxsize=queue_size)
    stop = threading.Event()

    def put(item):
        while not stop.is_set():
            try:
                buffer.put(item, timeout=PUT_TIMEOUT)
                return True
            except queue.Full:
                continue
        return False

    def produce():
        try:
            for item in items:
                if not put(item):
                    return
        except Exception as e:
            put(_Failure(e))
        else:
            put(_DONE)

    thread = threading.Thread(target=produce, name='ecgcrypt-producer', daemon=True)
    thread.start()
    try:
        while True:
            item = buffer.get()
            if item is _DONE:
                break
            if isinstance(item, _Failure):
                raise item.error
            yield handler(item)
    finally:
        stop.set()
        thread.join(timeout=1.0)
