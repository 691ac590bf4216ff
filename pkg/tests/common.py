import numpy as np

from ecgcrypt.cipher import ChaoticKey
from ecgcrypt.ingest import SynthConfig, center_array, segment_to_bytes, synth_ecg

# key of the published experiments
DEFAULT_KEY = ChaoticKey(0.5, 3.99)

# reduced network used for finite-difference checks
SMALL_SHAPE_ARGS = dict(beat_len=20, n_filters=4, kernel=3, hidden=8, n_classes=5)


def synth_raw(seconds=10.0, noise_std=2.0, seed=0, bpm=72.0):
    """Raw bytes and ground-truth R peaks of a synthetic recording at 500 Hz."""
    return synth_ecg(SynthConfig(heart_rate_bpm=bpm, noise_std=noise_std, seed=seed, duration_s=seconds))


def synth_plaintext(seconds=60.0, noise_std=2.0, seed=0):
    raw, _ = synth_raw(seconds, noise_std, seed)
    return segment_to_bytes(center_array(raw))


def random_bytes(rng, n):
    return rng.integers(0, 256, n, dtype=np.uint8).tobytes()
