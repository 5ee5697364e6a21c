from .check import CheckReport, StreamCheck, check_session
from .layout import (
    CATALOG_NAME,
    Catalog,
    CatalogError,
    StreamStats,
    read_catalog,
    session_dir,
    stream_log_name,
    write_catalog_atomic,
)
from .reader import SessionReader, StoreCorruption, TornTail
from .replay import AS_FAST, Pacing, paced, real_time, replay_session
from .writer import DEFAULT_FLUSH_INTERVAL_S, SessionWriter, StoreWriteError, UnknownStream

__all__ = [name for name in dir() if not name.startswith("_")]
