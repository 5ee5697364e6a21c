"""Framed envelope codec.

Frame layout (all integers little-endian):

    magic            4 bytes  b"SGMA"
    version          u8       currently 1
    stream_id        u16
    originating_time u64      nanoseconds since the session epoch
    payload_len      u32
    payload          payload_len bytes
    crc32            u32      zlib CRC-32 over every preceding byte of the frame

The wire format and the on-disk log format are the same bytes, so a log file is
replayable by pointing the decoder at it.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass

from .errors import BadMagic, CrcMismatch, FrameTooLarge, NonMonotonicTime, Truncated, UnsupportedVersion

MAGIC = b"SGMA"
VERSION = 1

_HEADER = struct.Struct("<4sBHQI")
_CRC = struct.Struct("<I")

HEADER_SIZE = _HEADER.size
FRAME_OVERHEAD = HEADER_SIZE + _CRC.size  # 23 bytes for an empty payload

# Largest payload we will believe. The biggest real payload (an RGB frame) is
# under 1 MiB; 64 MiB leaves generous headroom without letting a corrupt length
# field stall a reader forever.
MAX_PAYLOAD_LEN = 64 * 1024 * 1024

_U16_MAX = 0xFFFF
_U64_MAX = 0xFFFF_FFFF_FFFF_FFFF


@dataclass(frozen=True)
class SensorEnvelope:
    stream_id: int
    originating_time: int
    payload: bytes = b""

    def __post_init__(self) -> None:
        if not 0 <= self.stream_id <= _U16_MAX:
            raise ValueError(f"stream_id out of range: {self.stream_id}")
        if not 0 <= self.originating_time <= _U64_MAX:
            raise ValueError(f"originating_time out of range: {self.originating_time}")
        if len(self.payload) > MAX_PAYLOAD_LEN:
            raise ValueError(f"payload too large: {len(self.payload)}")


def encode_envelope(env: SensorEnvelope) -> bytes:
    head = _HEADER.pack(MAGIC, VERSION, env.stream_id, env.originating_time, len(env.payload))
    body = head + env.payload
    return body + _CRC.pack(zlib.crc32(body))


def decode_envelope(buf: bytes | bytearray | memoryview, offset: int = 0) -> tuple[SensorEnvelope, int]:
    """Decode one frame starting at offset. Returns (envelope, next_offset)."""
    view = memoryview(buf)
    try:
        if len(view) - offset < HEADER_SIZE:
            raise Truncated(f"need {HEADER_SIZE} header bytes, have {len(view) - offset}")
        magic, version, stream_id, time_ns, payload_len = _HEADER.unpack_from(view, offset)
        if magic != MAGIC:
            raise BadMagic(f"expected {MAGIC!r}, got {bytes(magic)!r}")
        if version != VERSION:
            raise UnsupportedVersion(f"version {version}")
        if payload_len > MAX_PAYLOAD_LEN:
            raise FrameTooLarge(f"declared payload of {payload_len} bytes")
        end = offset + HEADER_SIZE + payload_len + _CRC.size
        if len(view) < end:
            raise Truncated(f"need {end - offset} frame bytes, have {len(view) - offset}")
        (stored_crc,) = _CRC.unpack_from(view, end - _CRC.size)
        with view[offset : end - _CRC.size] as body:
            actual_crc = zlib.crc32(body)
        if stored_crc != actual_crc:
            raise CrcMismatch(f"stored {stored_crc:#010x}, computed {actual_crc:#010x}")
        payload = bytes(view[offset + HEADER_SIZE : end - _CRC.size])
        return SensorEnvelope(stream_id, time_ns, payload), end
    finally:
        # keeping the view alive (e.g. in a Truncated traceback) would pin the
        # caller's bytearray and break its resizing
        view.release()


class FrameDecoder:
    """Incremental decoder for a connection or log byte stream.

    feed() returns every complete envelope and keeps the unconsumed tail.
    Errors other than an internal Truncated propagate; the caller drops the
    connection.
    """

    def __init__(self, enforce_monotonic: bool = False) -> None:
        self._buf = bytearray()
        self._off = 0
        self._enforce = enforce_monotonic
        self._last_time: dict[int, int] = {}

    def feed(self, data: bytes) -> list[SensorEnvelope]:
        self._buf += data
        out: list[SensorEnvelope] = []
        while True:
            try:
                env, self._off = decode_envelope(self._buf, self._off)
            except Truncated:
                break
            if self._enforce:
                last = self._last_time.get(env.stream_id)
                if last is not None and env.originating_time <= last:
                    raise NonMonotonicTime(
                        f"stream {env.stream_id}: {env.originating_time} after {last}"
                    )
                self._last_time[env.stream_id] = env.originating_time
            out.append(env)
        if self._off > 1 << 20:
            del self._buf[: self._off]
            self._off = 0
        return out

    @property
    def pending_bytes(self) -> int:
        """Bytes buffered but not yet decodable (a torn tail once the stream ends)."""
        return len(self._buf) - self._off
