"""Wire protocol error taxonomy.

Decoding fails fast: the first malformed frame on a connection raises and the
connection is torn down. Truncated is the one non-fatal case (need more bytes).
"""


class WireError(Exception):
    pass


class BadMagic(WireError):
    pass


class UnsupportedVersion(WireError):
    pass


class CrcMismatch(WireError):
    pass


class Truncated(WireError):
    """Buffer ends mid-frame. Streaming callers wait for more bytes."""


class FrameTooLarge(WireError):
    """Declared payload length exceeds the sanity cap; treat as corruption."""


class SchemaViolation(WireError):
    """Payload bytes decode but violate the stream kind's content contract."""


class NonMonotonicTime(WireError):
    """originating_time did not strictly increase within a stream."""
