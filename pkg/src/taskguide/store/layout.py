"""On-disk session layout.

    <root>/<session_id>/
        catalog.json      session + stream metadata, rewritten atomically
        stream-<id>.log   raw wire frames for one stream, append-only

catalog.json schema (format_version 1):

    {
      "format_version": 1,
      "session_id": "<32 hex>",
      "epoch_utc_us": <int>,
      "clean_close": <bool>,
      "streams": [
        {"stream_id": <int>, "name": str, "kind": str, "nominal_rate_hz": float|null,
         "count": <int>, "first_time_ns": <int|null>, "last_time_ns": <int|null>}
      ]
    }

Counts in the catalog are advisory (the periodic flush can lag the logs after a
crash); the logs are the source of truth and `check` reconciles the two.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path

from ..wire import SchemaViolation, StreamDescriptor, StreamKind, StreamManifest

CATALOG_NAME = "catalog.json"
FORMAT_VERSION = 1


def stream_log_name(stream_id: int) -> str:
    return f"stream-{stream_id}.log"


def session_dir(root: Path, session_id: str) -> Path:
    return Path(root) / session_id


@dataclass
class StreamStats:
    count: int = 0
    first_time_ns: int | None = None
    last_time_ns: int | None = None


@dataclass
class Catalog:
    manifest: StreamManifest
    stats: dict[int, StreamStats]
    clean_close: bool

    def to_json_obj(self) -> dict:
        streams = []
        for desc in self.manifest.streams:
            st = self.stats.get(desc.stream_id, StreamStats())
            streams.append(
                {
                    "stream_id": desc.stream_id,
                    "name": desc.name,
                    "kind": desc.kind.value,
                    "nominal_rate_hz": desc.nominal_rate_hz,
                    "count": st.count,
                    "first_time_ns": st.first_time_ns,
                    "last_time_ns": st.last_time_ns,
                }
            )
        return {
            "format_version": FORMAT_VERSION,
            "session_id": self.manifest.session_id,
            "epoch_utc_us": self.manifest.epoch_utc_us,
            "clean_close": self.clean_close,
            "streams": streams,
        }


class CatalogError(Exception):
    pass


def write_catalog_atomic(directory: Path, catalog: Catalog) -> None:
    """Write catalog.json via temp file + rename so readers never see a torn catalog."""
    target = directory / CATALOG_NAME
    tmp = directory / (CATALOG_NAME + ".tmp")
    data = json.dumps(catalog.to_json_obj(), indent=2, sort_keys=True) + "\n"
    fd = os.open(tmp, os.O_WRONLY | os.O_CREAT | os.O_TRUNC, 0o644)
    try:
        os.write(fd, data.encode("utf-8"))
        os.fsync(fd)
    finally:
        os.close(fd)
    os.replace(tmp, target)


def read_catalog(directory: Path) -> Catalog:
    path = Path(directory) / CATALOG_NAME
    try:
        obj = json.loads(path.read_text("utf-8"))
    except FileNotFoundError:
        raise CatalogError(f"missing {CATALOG_NAME} in {directory}") from None
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise CatalogError(f"unreadable catalog: {exc}") from exc
    try:
        if obj["format_version"] != FORMAT_VERSION:
            raise CatalogError(f"unsupported catalog format_version {obj['format_version']}")
        descriptors = []
        stats: dict[int, StreamStats] = {}
        for raw in obj["streams"]:
            rate = raw.get("nominal_rate_hz")
            descriptors.append(
                StreamDescriptor(
                    stream_id=int(raw["stream_id"]),
                    name=str(raw["name"]),
                    kind=StreamKind(raw["kind"]),
                    nominal_rate_hz=float(rate) if rate is not None else None,
                )
            )
            stats[int(raw["stream_id"])] = StreamStats(
                count=int(raw["count"]),
                first_time_ns=raw["first_time_ns"],
                last_time_ns=raw["last_time_ns"],
            )
        manifest = StreamManifest(str(obj["session_id"]), int(obj["epoch_utc_us"]), tuple(descriptors))
        return Catalog(manifest=manifest, stats=stats, clean_close=bool(obj["clean_close"]))
    except (KeyError, TypeError, ValueError, SchemaViolation) as exc:
        raise CatalogError(f"malformed catalog: {exc!r}") from exc
