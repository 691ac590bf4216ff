"""
Logistic-map stream cipher.

The keystream is the trajectory of the logistic map ``x <- r * x * (1 - x)``
started at the secret initial condition ``x0``, each state scaled to a byte
with ``int(x * 255)``. Encryption and decryption are the same XOR operation.

The state is reset to ``x0`` at the start of every :func:`apply_stream` call,
so a segment-by-segment caller (see :func:`encrypt_segments`) reuses the same
keystream for every segment.

Example::

    >>> from ecgcrypt.cipher import ChaoticKey, apply_stream
    >>> key = ChaoticKey(0.5, 3.99)
    >>> apply_stream(b'\\x00', key)
    b'\\xfe'
"""
from dataclasses import dataclass

import numpy as np

from ecgcrypt.exceptions import ConfigError, KeyRangeError


R_MIN = 3.57
R_MAX = 4.0
MAX_BURN_IN = 10 ** 6
SEGMENT_SIZE = 300


def _check_state(x):
    if not 0.0 < x < 1.0:
        raise KeyRangeError("logistic map state must lie in the open interval (0, 1), got {!r}".format(x))


def _check_r(r):
    if not R_MIN < r <= R_MAX:
        raise KeyRangeError("control parameter r must lie in ({}, {}], got {!r}".format(R_MIN, R_MAX, r))


@dataclass(frozen=True)
class ChaoticKey:
    """Secret ``(x0, r)`` pair of the logistic map."""
    x0: float = 0.5
    r: float = 3.99

    def __post_init__(self):
        object.__setattr__(self, 'x0', float(self.x0))
        object.__setattr__(self, 'r', float(self.r))
        _check_state(self.x0)
        _check_r(self.r)
        # the first iterate must stay inside (0, 1) as well
        logistic_step(self.x0, self.r)

    def perturbed(self, delta):
        """Return a key with ``x0 + delta``, or ``x0 - delta`` when the former leaves (0, 1)."""
        x0 = self.x0 + delta
        if not 0.0 < x0 < 1.0:
            x0 = self.x0 - delta
        return ChaoticKey(x0, self.r)


@dataclass(frozen=True)
class CipherConfig:
    burn_in: int = 0

    def __post_init__(self):
        if isinstance(self.burn_in, bool) or not isinstance(self.burn_in, (int, np.integer)):
            raise ConfigError("burn_in must be an integer, got {!r}".format(self.burn_in))
        if not 0 <= self.burn_in <= MAX_BURN_IN:
            raise ConfigError("burn_in must be in [0, {}], got {}".format(MAX_BURN_IN, self.burn_in))


DEFAULT_CONFIG = CipherConfig()


@dataclass
class KeystreamState:
    x: float
    iterations: int = 0


def logistic_step(x, r):
    """Return ``r * x * (1 - x)``.

    Raises :class:`KeyRangeError` when ``x`` or ``r`` is out of domain or when the
    orbit leaves (0, 1), which only happens for ``r == 4`` at ``x == 0.5``.
    """
    _check_state(x)
    _check_r(r)
    y = r * x * (1.0 - x)
    _check_state(y)
    return y


class Keystream:
    """Single-owner keystream generator. Do not share one instance between threads.

    Parameters
    ----------
    key : ChaoticKey
    config : CipherConfig, optional
    """

    def __init__(self, key, config=None):
        self.key = key
        self.config = config or DEFAULT_CONFIG
        self.state = None
        self.reset()

    def reset(self):
        """Restart at ``x0`` and discard the configured burn-in steps."""
        self.state = KeystreamState(self.key.x0, 0)
        for _ in range(self.config.burn_in):
            self.step()

    def step(self):
        self.state.x = logistic_step(self.state.x, self.key.r)
        self.state.iterations += 1
        return self.state.x

    def take(self, n):
        """Advance ``n`` steps and return the scaled states as a uint8 array."""
        if n < 0:
            raise ValueError("keystream length must be nonnegative, got {}".format(n))
        out = bytearray(n)
        x = self.state.x
        r = self.key.r
        # Inlined logistic_step; the range check stays in the loop.
        for i in range(n):
            x = r * x * (1.0 - x)
            if not 0.0 < x < 1.0:
                raise KeyRangeError("logistic orbit left (0, 1) after {} steps".format(self.state.iterations + i))
            out[i] = int(x * 255)
        self.state.x = x
        self.state.iterations += n
        return np.frombuffer(bytes(out), dtype=np.uint8)


def keystream_bytes(key, config=None, n=0):
    """Return the first ``n`` keystream bytes of ``key`` after the burn-in."""
    return Keystream(key, config).take(n).tobytes()


def apply_stream(data, key, config=None):
    """XOR ``data`` with a freshly reset keystream. Encrypts and decrypts."""
    plain = np.frombuffer(bytes(data), dtype=np.uint8)
    stream = Keystream(key, config).take(plain.size)
    return np.bitwise_xor(plain, stream).tobytes()


def encrypt_segments(data, key, config=None, segment_size=SEGMENT_SIZE):
    """Apply the cipher independently to consecutive ``segment_size`` units.

    The final partial unit goes through the cipher with its own reset.
    """
    if segment_size < 1:
        raise ConfigError("segment_size must be positive, got {}".format(segment_size))
    data = bytes(data)
    return b''.join(apply_stream(data[i:i + segment_size], key, config)
                    for i in range(0, len(data), segment_size))


decrypt_segments = encrypt_segments
