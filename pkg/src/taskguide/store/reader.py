"""Session reader: per-stream scans and time-ordered k-way merge.

A log's final frame may be torn (partial write at process death); that is
tolerated and reported. Any mid-file decode failure is corruption and raises.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

from ..wire import SensorEnvelope, Truncated, WireError, decode_envelope
from .layout import Catalog, read_catalog, stream_log_name

_READ_CHUNK = 1 << 20


class StoreCorruption(Exception):
    pass


@dataclass(frozen=True)
class TornTail:
    stream_id: int
    offset: int  # absolute file offset where the torn frame starts
    byte_count: int


class SessionReader:
    def __init__(self, directory: Path) -> None:
        self.directory = Path(directory)
        self.catalog: Catalog = read_catalog(self.directory)
        self.manifest = self.catalog.manifest
        # populated lazily as streams are scanned
        self.torn_tails: dict[int, TornTail] = {}

    def log_path(self, stream_id: int) -> Path:
        return self.directory / stream_log_name(stream_id)

    def iter_stream(
        self,
        stream_id: int,
        from_time: int | None = None,
        to_time: int | None = None,
    ) -> Iterator[SensorEnvelope]:
        """Yield a stream's envelopes in order, filtered to [from_time, to_time]."""
        self.manifest.descriptor(stream_id)  # KeyError for unknown streams
        path = self.log_path(stream_id)
        if not path.exists():
            return  # stream declared but never appended to
        buf = bytearray()
        offset = 0  # within buf
        compacted = 0  # bytes dropped from the front of buf so far
        with open(path, "rb") as f:
            eof = False
            while True:
                frame_start = compacted + offset
                try:
                    env, offset = decode_envelope(buf, offset)
                except Truncated:
                    if not eof:
                        chunk = f.read(_READ_CHUNK)
                        if chunk:
                            buf += chunk
                        else:
                            eof = True
                        continue
                    tail = len(buf) - offset
                    if tail:
                        self.torn_tails[stream_id] = TornTail(stream_id, frame_start, tail)
                    return
                except WireError as exc:
                    raise StoreCorruption(f"{path.name} at offset {frame_start}: {exc}") from exc
                if env.stream_id != stream_id:
                    raise StoreCorruption(
                        f"{path.name} at offset {frame_start}: frame for stream {env.stream_id}"
                    )
                if offset > _READ_CHUNK:
                    compacted += offset
                    del buf[:offset]
                    offset = 0
                if to_time is not None and env.originating_time > to_time:
                    return
                if from_time is not None and env.originating_time < from_time:
                    continue
                yield env

    def iter_merged(
        self,
        from_time: int | None = None,
        to_time: int | None = None,
        stream_ids: list[int] | None = None,
    ) -> Iterator[SensorEnvelope]:
        """Merge streams into one sequence ordered by (originating_time, stream_id)."""
        ids = sorted(stream_ids) if stream_ids is not None else sorted(self.manifest.stream_ids())
        iters = [self.iter_stream(i, from_time, to_time) for i in ids]
        return heapq.merge(*iters, key=lambda e: (e.originating_time, e.stream_id))

    def count_stream(self, stream_id: int) -> int:
        return sum(1 for _ in self.iter_stream(stream_id))
