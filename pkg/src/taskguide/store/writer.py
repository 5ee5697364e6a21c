"""Append-only session writer.

Single-threaded by design: the pipeline owns the writer. Durability contract:
stream log buffers are flushed to the OS before every catalog write, so a
killed process can leave logs *ahead* of the catalog (plus at most one torn
frame per log from a partial buffer flush) but never behind it.
"""

from __future__ import annotations

import os
import time
from pathlib import Path
from typing import BinaryIO, Callable

from ..wire import NonMonotonicTime, SensorEnvelope, StreamManifest, encode_envelope
from .layout import Catalog, StreamStats, session_dir, stream_log_name, write_catalog_atomic

DEFAULT_FLUSH_INTERVAL_S = 5.0
_LOG_BUFFER_BYTES = 1 << 20


class StoreWriteError(Exception):
    pass


class UnknownStream(StoreWriteError):
    pass


class SessionWriter:
    def __init__(
        self,
        root: Path,
        manifest: StreamManifest,
        flush_interval_s: float = DEFAULT_FLUSH_INTERVAL_S,
        _clock: Callable[[], float] = time.monotonic,
    ) -> None:
        self.manifest = manifest
        self.directory = session_dir(Path(root), manifest.session_id)
        self._clock = _clock
        self._flush_interval = flush_interval_s
        self._stats: dict[int, StreamStats] = {s.stream_id: StreamStats() for s in manifest.streams}
        self._logs: dict[int, BinaryIO] = {}
        self._closed = False
        os.makedirs(root, exist_ok=True)
        os.mkdir(self.directory)  # a session id is never reused; fail loudly if it exists
        self._write_catalog(clean_close=False)
        self._last_flush = self._clock()

    def _write_catalog(self, clean_close: bool) -> None:
        write_catalog_atomic(self.directory, Catalog(self.manifest, self._stats, clean_close))

    def _log_for(self, stream_id: int) -> BinaryIO:
        log = self._logs.get(stream_id)
        if log is None:
            path = self.directory / stream_log_name(stream_id)
            log = open(path, "ab", buffering=_LOG_BUFFER_BYTES)
            self._logs[stream_id] = log
        return log

    def append(self, env: SensorEnvelope) -> None:
        if self._closed:
            raise StoreWriteError("writer is closed")
        stats = self._stats.get(env.stream_id)
        if stats is None:
            raise UnknownStream(f"stream {env.stream_id} not in manifest")
        if stats.last_time_ns is not None and env.originating_time <= stats.last_time_ns:
            raise NonMonotonicTime(
                f"stream {env.stream_id}: {env.originating_time} after {stats.last_time_ns}"
            )
        self._log_for(env.stream_id).write(encode_envelope(env))
        stats.count += 1
        stats.last_time_ns = env.originating_time
        if stats.first_time_ns is None:
            stats.first_time_ns = env.originating_time
        if self._clock() - self._last_flush >= self._flush_interval:
            self.flush()

    def flush(self) -> None:
        """Flush log buffers to the OS, then persist a catalog that matches them."""
        for log in self._logs.values():
            log.flush()
        self._write_catalog(clean_close=False)
        self._last_flush = self._clock()

    def close(self) -> None:
        if self._closed:
            return
        for log in self._logs.values():
            log.flush()
            os.fsync(log.fileno())
            log.close()
        self._write_catalog(clean_close=True)
        self._closed = True

    def __enter__(self) -> "SessionWriter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()
