"""
Synthetic five-class beat dataset.

Each class has its own PQRST morphology inside the 180-sample window. Examples
are jittered in amplitude, timing and width, perturbed with gaussian noise and
z-scored like beats extracted from a live stream.
"""
import numpy as np

from ecgcrypt.beats import BEAT_LENGTH, HALF_BEAT, prepare_beat
from ecgcrypt.ingest import DEFAULT_FS, PQRST_WAVES
from ecgcrypt.inference.model import CLASS_LABELS

# (offset from the R apex in s, amplitude relative to a normal R, gaussian width in s)
CLASS_WAVES = {
    'N': PQRST_WAVES,
    'LBBB': (
        (-0.160, 0.12, 0.025),
        (-0.012, 0.75, 0.018),
        (0.022, 0.85, 0.018),
        (0.280, -0.25, 0.050),
    ),
    'RBBB': (
        (-0.160, 0.12, 0.025),
        (-0.020, -0.08, 0.008),
        (0.000, 0.80, 0.009),
        (0.030, -0.35, 0.010),
        (0.065, 0.60, 0.014),
    ),
    'APC': (
        (-0.110, -0.20, 0.020),
        (-0.025, -0.12, 0.008),
        (0.000, 1.00, 0.010),
        (0.025, -0.22, 0.008),
        (0.220, 0.30, 0.040),
    ),
    'VPC': (
        (0.000, 1.30, 0.030),
        (0.060, -0.60, 0.030),
        (0.170, -0.40, 0.040),
    ),
}


def render_window(waves, fs_hz=DEFAULT_FS, shift=0.0, gain=1.0, width_scale=1.0):
    """One beat window with the R apex at sample 90 (plus ``shift`` samples)."""
    t = (np.arange(BEAT_LENGTH) - HALF_BEAT - shift) / fs_hz
    window = np.zeros(BEAT_LENGTH)
    for offset, amplitude, width in waves:
        window += gain * amplitude * np.exp(-0.5 * ((t - offset) / (width * width_scale)) ** 2)
    return window


def make_template_dataset(n_per_class=40, seed=0, noise_std=0.03, fs_hz=DEFAULT_FS):
    """Return ``(beats, labels)``: z-scored windows and class indices into ``CLASS_LABELS``."""
    rng = np.random.default_rng(seed)
    beats, labels = [], []
    for label, name in enumerate(CLASS_LABELS):
        for _ in range(n_per_class):
            window = render_window(
                CLASS_WAVES[name], fs_hz,
                shift=rng.uniform(-2.0, 2.0),
                gain=rng.uniform(0.85, 1.15),
                width_scale=rng.uniform(0.9, 1.1),
            )
            window += rng.normal(0.0, noise_std, BEAT_LENGTH)
            beats.append(prepare_beat(window))
            labels.append(label)
    return np.array(beats).reshape(-1, BEAT_LENGTH), np.array(labels, dtype=np.int64)
