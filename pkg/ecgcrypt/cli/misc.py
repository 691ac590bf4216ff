import logging
import os
import sys
from contextlib import contextmanager

import click

from ecgcrypt.cipher import ChaoticKey, CipherConfig
from ecgcrypt.exceptions import CommandError, EcgCryptError

LOG_FORMAT = '%(asctime)s: %(message)s'
LOG_LEVELS = ('DEBUG', 'INFO', 'WARNING', 'ERROR')


def get_log_level(verbose=0):
    """``-v`` means INFO, ``-vv`` DEBUG; otherwise ``ECGCRYPT_LOG_LEVEL`` or WARNING."""
    if verbose >= 2:
        return logging.DEBUG
    if verbose == 1:
        return logging.INFO
    value = os.environ.get('ECGCRYPT_LOG_LEVEL', 'WARNING').upper()
    if value not in LOG_LEVELS:
        click.echo('Warning: unknown ECGCRYPT_LOG_LEVEL {!r}, using WARNING.'.format(value), err=True)
        value = 'WARNING'
    return getattr(logging, value)


def setup_logging(verbose=0):
    logger = logging.getLogger('ecgcrypt')
    for handler in list(logger.handlers):
        if getattr(handler, '_ecgcrypt_cli', False):
            logger.removeHandler(handler)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    handler._ecgcrypt_cli = True
    logger.addHandler(handler)
    logger.setLevel(get_log_level(verbose))
    return logger


def make_key(x0, r, burn_in=0):
    try:
        return ChaoticKey(x0, r), CipherConfig(burn_in)
    except EcgCryptError as e:
        raise CommandError(str(e))


@contextmanager
def command_errors():
    """Turn library and file errors into a clean CLI failure."""
    try:
        yield
    except (EcgCryptError, OSError) as e:
        raise CommandError(str(e))


def warn(message):
    click.echo('Warning: {}'.format(message), err=True)


def echo_table(rows, headers):
    widths = [max(len(str(row[i])) for row in [headers] + list(rows)) for i in range(len(headers))]
    fmt = '  '.join('{:<%d}' % w for w in widths)
    click.echo(fmt.format(*headers))
    click.echo(fmt.format(*('-' * w for w in widths)))
    for row in rows:
        click.echo(fmt.format(*(str(value) for value in row)))
