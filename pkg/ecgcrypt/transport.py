"""
Framed wire format for encrypted segments.

Layout, big-endian::

    magic     4 bytes  b'ECGX'
    version   1 byte   1
    seq       8 bytes  unsigned
    timestamp 8 bytes  unsigned, ms since stream start
    length    2 bytes  unsigned payload length
    payload   length bytes of ciphertext
    crc32     4 bytes  over every preceding byte of the frame

A ``.ecgx`` file is a plain concatenation of frames. The decoder reports
problems as events in stream order and resynchronizes on the next magic; it
never yields a frame whose CRC did not validate. Keys never travel in frames.
"""
import logging
import struct
import zlib
from dataclasses import dataclass
from pathlib import Path

from ecgcrypt.exceptions import PayloadTooLarge

LOGGER = logging.getLogger(__name__)

MAGIC = b'ECGX'
VERSION = 1
HEADER = struct.Struct('>4sBQQH')
TRAILER = struct.Struct('>I')
MAX_PAYLOAD = 0xFFFF
OVERHEAD = HEADER.size + TRAILER.size
READ_CHUNK = 65536


@dataclass(frozen=True)
class EncryptedFrame:
    seq: int
    timestamp_ms: int
    payload: bytes

    def encode(self):
        return encode_frame(self.payload, self.seq, self.timestamp_ms)


class DecodeEvent:
    """Base of the error events emitted by :class:`FrameDecoder`; each carries a stream ``offset``."""


@dataclass(frozen=True)
class BadMagic(DecodeEvent):
    offset: int
    skipped: int


@dataclass(frozen=True)
class BadVersion(DecodeEvent):
    offset: int
    version: int


@dataclass(frozen=True)
class CrcMismatch(DecodeEvent):
    offset: int
    seq: int
    expected: int
    actual: int


@dataclass(frozen=True)
class Truncated(DecodeEvent):
    offset: int
    available: int


def encode_frame(payload, seq, timestamp_ms):
    payload = bytes(payload)
    if len(payload) > MAX_PAYLOAD:
        raise PayloadTooLarge("payload of {} bytes exceeds {}".format(len(payload), MAX_PAYLOAD))
    body = HEADER.pack(MAGIC, VERSION, seq, timestamp_ms, len(payload)) + payload
    return body + TRAILER.pack(zlib.crc32(body) & 0xFFFFFFFF)


class FrameDecoder:
    """Incremental decoder holding the scan state of one byte stream.

    Feed chunks with :meth:`feed`, then call :meth:`finish` at end of stream.
    Both return a list of :class:`EncryptedFrame` and :class:`DecodeEvent`.

    Every skipped byte is reported as :class:`BadMagic`, except the bytes of a
    frame that already produced an event. Those extend to the frame's declared
    end when no other magic starts inside it; otherwise its length field is not
    trusted and only the failed magic byte itself goes unreported.
    """

    def __init__(self):
        self._buffer = bytearray()
        self._offset = 0  # stream position of _buffer[0]
        self._quiet_until = 0  # stream position where the last failed frame ends

    def feed(self, data):
        self._buffer.extend(data)
        return self._scan(final=False)

    def finish(self):
        return self._scan(final=True)

    def _drop(self, n):
        del self._buffer[:n]
        self._offset += n

    def _skip(self, n, out):
        start = max(self._offset, self._quiet_until)
        end = self._offset + n
        if end > start:
            out.append(BadMagic(start, end - start))
        self._drop(n)

    def _fail(self, event, out, span):
        """Report ``event`` for the frame at the buffer head and restart one byte past its magic."""
        LOGGER.warning("frame decode error: %s", event)
        out.append(event)
        if self._buffer.find(MAGIC, 1, span) < 0:
            self._quiet_until = self._offset + span
        else:
            self._quiet_until = self._offset + 1
        self._drop(1)

    def _scan(self, final):
        out = []
        buf = self._buffer
        while True:
            idx = buf.find(MAGIC)
            if idx < 0:
                # keep a possible partial magic at the tail
                keep = 0 if final else len(MAGIC) - 1
                if len(buf) > keep:
                    self._skip(len(buf) - keep, out)
                return out
            if idx > 0:
                self._skip(idx, out)

            if len(buf) < HEADER.size:
                if final:
                    self._fail(Truncated(self._offset, len(buf)), out, len(buf))
                    continue
                return out
            _, version, seq, timestamp_ms, length = HEADER.unpack_from(buf)
            total = HEADER.size + length + TRAILER.size
            if len(buf) < total and not final:
                return out
            if version != VERSION:
                self._fail(BadVersion(self._offset, version), out, min(total, len(buf)))
                continue
            if len(buf) < total:
                self._fail(Truncated(self._offset, len(buf)), out, len(buf))
                continue
            body = bytes(buf[:HEADER.size + length])
            (actual,) = TRAILER.unpack_from(buf, HEADER.size + length)
            expected = zlib.crc32(body) & 0xFFFFFFFF
            if actual != expected:
                self._fail(CrcMismatch(self._offset, seq, expected, actual), out, total)
                continue
            out.append(EncryptedFrame(seq, timestamp_ms, body[HEADER.size:]))
            self._drop(total)


def decode_frames(source):
    """Yield frames and error events from bytes or a binary file object."""
    decoder = FrameDecoder()
    if hasattr(source, 'read'):
        while True:
            chunk = source.read(READ_CHUNK)
            if not chunk:
                break
            yield from decoder.feed(chunk)
    else:
        yield from decoder.feed(source)
    yield from decoder.finish()


def is_frame(item):
    return isinstance(item, EncryptedFrame)


def write_frames(path, frames):
    with open(Path(path), 'wb') as fp:
        for frame in frames:
            fp.write(frame.encode())


def read_frames(path):
    """Yield frames and events from a ``.ecgx`` file."""
    with open(Path(path), 'rb') as fp:
        yield from decode_frames(fp)
