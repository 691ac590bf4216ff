"""
Cryptographic audit of the cipher output: monobit frequency test, Shannon
entropy, avalanche effect, key sensitivity, plaintext/ciphertext correlation and
byte histograms.

The avalanche test perturbs the key (``x0 + 1e-10``), not the plaintext: for an
XOR stream cipher a flipped plaintext bit flips exactly one ciphertext bit.
Both the byte-level ratio (the headline figure) and the bit-level ratio are
reported. Statistics are population statistics.
"""
import csv
import json
import logging
from collections import namedtuple
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import erfc
from scipy.stats import chisquare

from ecgcrypt.cipher import apply_stream, encrypt_segments, logistic_step
from ecgcrypt.exceptions import EmptyInput, InputTooShort, LengthMismatch, ZeroVariance

LOGGER = logging.getLogger(__name__)

MONOBIT_MIN_BITS = 100
MONOBIT_ALPHA = 0.01
AUDIT_MIN_BYTES = 12500
AVALANCHE_DELTA = 1e-10
KEY_SENSITIVITY_DELTA = 0.01
MIN_STD = 1e-12

# published reference values, compared against in the summary table
PUBLISHED = {
    'nist_pass': True,
    'shannon_entropy_bits': 7.935,
    'avalanche_ratio': 1.0,
    'key_sensitivity_ratio': 0.9917,
    'correlation': 0.0075,
}

MonobitResult = namedtuple('MonobitResult', ['p_value', 'passed'])
ChangeRatio = namedtuple('ChangeRatio', ['byte_ratio', 'bit_ratio'])


def as_bytes_array(data):
    return np.frombuffer(bytes(data), dtype=np.uint8)


def bytes_to_bits(data):
    """MSB-first bit array of a byte sequence."""
    return np.unpackbits(as_bytes_array(data))


def nist_monobit(bits):
    """Frequency (monobit) test: ``p = erfc(|S| / sqrt(2n))``, pass when p >= 0.01."""
    bits = np.asarray(bits, dtype=np.int64)
    n = bits.size
    if n < MONOBIT_MIN_BITS:
        raise InputTooShort("monobit test needs at least {} bits, got {}".format(MONOBIT_MIN_BITS, n))
    s = 2 * int(bits.sum()) - n
    s_obs = abs(s) / np.sqrt(n)
    p_value = float(erfc(s_obs / np.sqrt(2.0)))
    return MonobitResult(p_value, p_value >= MONOBIT_ALPHA)


def histogram256(data):
    return np.bincount(as_bytes_array(data), minlength=256)


def shannon_entropy(data):
    """Empirical entropy in bits per byte, in [0, 8]."""
    counts = histogram256(data)
    total = counts.sum()
    if total == 0:
        raise EmptyInput("entropy of an empty sequence")
    p = counts[counts > 0] / total
    return float(max(0.0, -np.sum(p * np.log2(p))))


def chi_square_uniformity(counts):
    """Chi-square statistic and p-value of byte counts against the uniform distribution."""
    counts = np.asarray(counts)
    if counts.sum() == 0:
        return 0.0, 1.0
    stat, p_value = chisquare(counts)
    return float(stat), float(p_value)


def _encrypt(data, key, config=None, segment_size=None):
    if segment_size is None:
        return apply_stream(data, key, config)
    return encrypt_segments(data, key, config, segment_size)


def change_ratio(a, b):
    """Fraction of differing bytes and of differing bits between equal-length sequences."""
    x, y = as_bytes_array(a), as_bytes_array(b)
    if x.size != y.size:
        raise LengthMismatch("sequences of {} and {} bytes".format(x.size, y.size))
    if x.size == 0:
        raise EmptyInput("change ratio of empty sequences")
    return ChangeRatio(float(np.mean(x != y)), float(np.mean(np.unpackbits(x ^ y))))


def perturbation_absorbed(key, delta=AVALANCHE_DELTA):
    """True when the perturbed key reaches the same first iterate as ``key``.

    Near the critical point 0.5 the map is flat to first order, so a shift of
    1e-10 vanishes in float64 rounding and both keys produce one keystream.
    In exact arithmetic ``x0`` and ``1 - x0`` are equivalent keys as well.
    """
    return logistic_step(key.x0, key.r) == logistic_step(key.perturbed(delta).x0, key.r)


def avalanche(key, data, config=None, delta=AVALANCHE_DELTA, segment_size=None):
    """Ciphertext change under an ``x0`` perturbation of ``delta`` (downward if needed)."""
    if len(data) == 0:
        raise EmptyInput("avalanche test on empty data")
    reference = _encrypt(data, key, config, segment_size)
    perturbed = _encrypt(data, key.perturbed(delta), config, segment_size)
    return change_ratio(reference, perturbed)


def key_sensitivity(key, data, config=None, delta=KEY_SENSITIVITY_DELTA, segment_size=None):
    """Fraction of ciphertext bytes that change when ``x0`` moves by 0.01."""
    return avalanche(key, data, config, delta, segment_size).byte_ratio


def correlation(x, y):
    """Pearson coefficient from population covariance and standard deviations."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise LengthMismatch("sequences of length {} and {}".format(x.size, y.size))
    if x.size < 2:
        raise InputTooShort("correlation needs at least 2 samples")
    dx, dy = x - x.mean(), y - y.mean()
    sx, sy = np.sqrt(np.mean(dx * dx)), np.sqrt(np.mean(dy * dy))
    if sx < MIN_STD or sy < MIN_STD:
        raise ZeroVariance("correlation with a constant sequence")
    rho = np.mean(dx * dy) / (sx * sy)
    return float(np.clip(rho, -1.0, 1.0))


@dataclass
class SecurityReport:
    nist_pass: bool
    nist_p_value: float
    shannon_entropy_bits: float
    avalanche_ratio: float
    avalanche_bit_ratio: float
    key_sensitivity_ratio: float
    correlation: float
    decrypted_correlation: float
    chi_square: float
    chi_square_p_value: float
    n_bytes: int
    avalanche_degenerate: bool = False
    histogram_encrypted: list = field(default_factory=list)
    histogram_decrypted: list = field(default_factory=list)

    def to_dict(self):
        return asdict(self)

    def to_json(self, indent=2):
        return json.dumps(self.to_dict(), indent=indent)

    @classmethod
    def from_json(cls, text):
        return cls(**json.loads(text))

    def summary_rows(self):
        """``(test, measured, published)`` rows shaped like the published results table."""
        avalanche_text = '{:.4f} (bits {:.4f})'.format(self.avalanche_ratio, self.avalanche_bit_ratio)
        if self.avalanche_degenerate:
            avalanche_text += ' key perturbation absorbed'
        return [
            ('NIST Frequency', str(self.nist_pass), str(PUBLISHED['nist_pass'])),
            ('Shannon Entropy', '{:.4f}'.format(self.shannon_entropy_bits),
             str(PUBLISHED['shannon_entropy_bits'])),
            ('Avalanche Effect', avalanche_text, str(PUBLISHED['avalanche_ratio'])),
            ('Key Sensitivity', '{:.4f}'.format(self.key_sensitivity_ratio),
             str(PUBLISHED['key_sensitivity_ratio'])),
            ('Correlation', '{:.4f}'.format(self.correlation), str(PUBLISHED['correlation'])),
        ]


def run_audit(key, plaintext, config=None, segment_size=None, min_bytes=AUDIT_MIN_BYTES):
    """Encrypt once and run the whole battery.

    By default the plaintext goes through one continuous keystream run;
    ``segment_size`` reproduces the per-segment resets of the live pipeline.
    """
    plaintext = bytes(plaintext)
    if len(plaintext) < min_bytes:
        raise InputTooShort("audit needs at least {} bytes, got {}".format(min_bytes, len(plaintext)))
    ciphertext = _encrypt(plaintext, key, config, segment_size)
    decrypted = _encrypt(ciphertext, key, config, segment_size)

    monobit = nist_monobit(bytes_to_bits(ciphertext))
    ratio = avalanche(key, plaintext, config, segment_size=segment_size)
    # the plaintext is the two's-complement form of the centered signal
    signal = np.frombuffer(plaintext, dtype=np.int8)
    hist_enc = histogram256(ciphertext)
    chi2, chi2_p = chi_square_uniformity(hist_enc)
    report = SecurityReport(
        nist_pass=bool(monobit.passed),
        nist_p_value=monobit.p_value,
        shannon_entropy_bits=shannon_entropy(ciphertext),
        avalanche_ratio=ratio.byte_ratio,
        avalanche_bit_ratio=ratio.bit_ratio,
        key_sensitivity_ratio=key_sensitivity(key, plaintext, config, segment_size=segment_size),
        correlation=correlation(signal, as_bytes_array(ciphertext)),
        decrypted_correlation=correlation(signal, np.frombuffer(decrypted, dtype=np.int8)),
        chi_square=chi2,
        chi_square_p_value=chi2_p,
        n_bytes=len(plaintext),
        avalanche_degenerate=perturbation_absorbed(key),
        histogram_encrypted=hist_enc.tolist(),
        histogram_decrypted=histogram256(decrypted).tolist(),
    )
    if report.avalanche_degenerate:
        LOGGER.warning("x0=%r absorbs a %g perturbation, avalanche is measured on identical keystreams",
                       key.x0, AVALANCHE_DELTA)
    if not report.nist_pass:
        LOGGER.warning("monobit test failed (p=%.4g)", report.nist_p_value)
    LOGGER.info("audit of %d bytes: entropy %.4f (published %.3f)", len(plaintext),
                report.shannon_entropy_bits, PUBLISHED['shannon_entropy_bits'])
    return report


def write_histogram_csv(path, counts):
    with open(Path(path), 'w', newline='') as fp:
        writer = csv.writer(fp)
        writer.writerow(['value', 'count'])
        for value, count in enumerate(counts):
            writer.writerow([value, int(count)])


def write_report(report, path):
    """Write the JSON report and its two histogram CSVs next to it.

    Returns the paths written.
    """
    path = Path(path)
    path.write_text(report.to_json())
    stem = path.with_suffix('')
    enc = Path(str(stem) + '_hist_encrypted.csv')
    dec = Path(str(stem) + '_hist_decrypted.csv')
    write_histogram_csv(enc, report.histogram_encrypted)
    write_histogram_csv(dec, report.histogram_decrypted)
    return path, enc, dec
