"""Session stream manifest.

A session opens with a manifest describing every stream the sender will use.
On the wire the manifest rides in a regular envelope on reserved stream id 0
with originating_time 0, so log files are self-describing.
"""

from __future__ import annotations

import uuid
from dataclasses import dataclass

from .envelope import SensorEnvelope
from .errors import SchemaViolation
from .payloads import CLIENT_KINDS, StreamKind, canonical_json_bytes, decode_json_object

MANIFEST_STREAM_ID = 0

# Client-declared streams use ids 1..99; the server injects and derives streams
# at 100+. Fixed ranges keep replay-derived streams on stable ids.
MAX_CLIENT_STREAM_ID = 99


@dataclass(frozen=True)
class StreamDescriptor:
    stream_id: int
    name: str
    kind: StreamKind
    nominal_rate_hz: float | None = None

    def to_json_obj(self) -> dict:
        return {
            "stream_id": self.stream_id,
            "name": self.name,
            "kind": self.kind.value,
            "nominal_rate_hz": self.nominal_rate_hz,
        }


@dataclass(frozen=True)
class StreamManifest:
    session_id: str  # 128-bit id as 32 hex chars
    epoch_utc_us: int  # session epoch, microseconds since the Unix epoch
    streams: tuple[StreamDescriptor, ...]

    def __post_init__(self) -> None:
        if len(self.session_id) != 32 or any(c not in "0123456789abcdef" for c in self.session_id):
            raise SchemaViolation("manifest: session_id must be 32 lowercase hex chars")
        if self.epoch_utc_us < 0:
            raise SchemaViolation("manifest: negative epoch")
        ids = [s.stream_id for s in self.streams]
        names = [s.name for s in self.streams]
        if len(set(ids)) != len(ids):
            raise SchemaViolation("manifest: duplicate stream ids")
        if len(set(names)) != len(names):
            raise SchemaViolation("manifest: duplicate stream names")
        for s in self.streams:
            if s.stream_id == MANIFEST_STREAM_ID:
                raise SchemaViolation("manifest: stream id 0 is reserved")
            if not s.name:
                raise SchemaViolation("manifest: empty stream name")
            if s.nominal_rate_hz is not None and s.nominal_rate_hz <= 0:
                raise SchemaViolation(f"manifest: stream {s.name}: non-positive rate")

    def descriptor(self, stream_id: int) -> StreamDescriptor:
        for s in self.streams:
            if s.stream_id == stream_id:
                return s
        raise KeyError(stream_id)

    def stream_ids(self) -> frozenset[int]:
        return frozenset(s.stream_id for s in self.streams)

    def to_json_obj(self) -> dict:
        return {
            "session_id": self.session_id,
            "epoch_utc_us": self.epoch_utc_us,
            "streams": [s.to_json_obj() for s in self.streams],
        }


def new_session_id() -> str:
    return uuid.uuid4().hex


def validate_client_manifest(manifest: StreamManifest) -> None:
    """Extra constraints on manifests received from a client connection."""
    for s in manifest.streams:
        if s.stream_id > MAX_CLIENT_STREAM_ID:
            raise SchemaViolation(f"manifest: client stream id {s.stream_id} exceeds {MAX_CLIENT_STREAM_ID}")
        if s.kind not in CLIENT_KINDS:
            raise SchemaViolation(f"manifest: kind {s.kind.value} is server-origin only")


def manifest_from_json_obj(obj: dict) -> StreamManifest:
    try:
        raw_streams = obj["streams"]
        if not isinstance(raw_streams, list):
            raise SchemaViolation("manifest: streams must be a list")
        streams = []
        for raw in raw_streams:
            rate = raw.get("nominal_rate_hz")
            if rate is not None and not isinstance(rate, (int, float)):
                raise SchemaViolation("manifest: nominal_rate_hz must be a number or null")
            streams.append(
                StreamDescriptor(
                    stream_id=int(raw["stream_id"]),
                    name=str(raw["name"]),
                    kind=StreamKind(raw["kind"]),
                    nominal_rate_hz=float(rate) if rate is not None else None,
                )
            )
        return StreamManifest(str(obj["session_id"]), int(obj["epoch_utc_us"]), tuple(streams))
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaViolation(f"manifest: {exc!r}") from exc


def encode_manifest_envelope(manifest: StreamManifest) -> SensorEnvelope:
    return SensorEnvelope(MANIFEST_STREAM_ID, 0, canonical_json_bytes(manifest.to_json_obj()))


def decode_manifest_envelope(env: SensorEnvelope) -> StreamManifest:
    if env.stream_id != MANIFEST_STREAM_ID:
        raise SchemaViolation(f"manifest: expected stream id 0, got {env.stream_id}")
    return manifest_from_json_obj(decode_json_object(env.payload, "manifest"))
