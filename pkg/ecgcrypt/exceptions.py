import click


class EcgCryptError(Exception):
    """Base class of all ecgcrypt errors."""


class KeyRangeError(EcgCryptError, ValueError):
    pass


class ConfigError(EcgCryptError, ValueError):
    pass


class ReplayError(EcgCryptError, IOError):
    pass


class DegenerateSegment(EcgCryptError, ValueError):
    pass


class OutOfBounds(EcgCryptError, IndexError):
    pass


class ShapeMismatch(EcgCryptError, ValueError):
    pass


class WeightsFormatError(EcgCryptError, ValueError):
    pass


class DatasetError(EcgCryptError, ValueError):
    pass


class InputTooShort(EcgCryptError, ValueError):
    pass


class EmptyInput(EcgCryptError, ValueError):
    pass


class ZeroVariance(EcgCryptError, ValueError):
    pass


class LengthMismatch(EcgCryptError, ValueError):
    pass


class PayloadTooLarge(EcgCryptError, ValueError):
    pass


class CommandError(click.ClickException):
    """Raised by CLI commands; click prints the message and exits with status 1."""
    pass
