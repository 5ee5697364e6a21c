"""Store integrity check.

Reconciles catalog metadata against a full scan of every log. Tolerated:
logs ahead of a stale (crash-time) catalog, and one torn tail per log.
Everything else - corrupt frames, shrunken logs, stray files, non-monotonic
times - is a failure.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

from .layout import CATALOG_NAME, CatalogError, read_catalog, stream_log_name
from .reader import SessionReader, StoreCorruption

_LOG_RE = re.compile(r"^stream-(\d+)\.log$")


@dataclass
class StreamCheck:
    stream_id: int
    name: str
    catalog_count: int
    log_count: int = 0
    torn_tail_bytes: int = 0
    problems: list[str] = field(default_factory=list)


@dataclass
class CheckReport:
    directory: str
    ok: bool = True
    session_id: str = ""
    clean_close: bool = False
    streams: list[StreamCheck] = field(default_factory=list)
    problems: list[str] = field(default_factory=list)  # session-level problems

    def all_problems(self) -> list[str]:
        out = list(self.problems)
        for s in self.streams:
            out.extend(f"stream {s.stream_id} ({s.name}): {p}" for p in s.problems)
        return out


def check_session(directory: Path) -> CheckReport:
    directory = Path(directory)
    report = CheckReport(directory=str(directory))
    try:
        reader = SessionReader(directory)
    except CatalogError as exc:
        report.ok = False
        report.problems.append(str(exc))
        return report
    catalog = reader.catalog
    report.session_id = catalog.manifest.session_id
    report.clean_close = catalog.clean_close

    known_logs = {stream_log_name(s.stream_id) for s in catalog.manifest.streams}
    for entry in sorted(p.name for p in directory.iterdir()):
        if entry == CATALOG_NAME or entry in known_logs:
            continue
        report.problems.append(f"unexpected file {entry}")

    for desc in catalog.manifest.streams:
        stats = catalog.stats[desc.stream_id]
        sc = StreamCheck(desc.stream_id, desc.name, catalog_count=stats.count)
        report.streams.append(sc)
        last_time: int | None = None
        try:
            for env in reader.iter_stream(desc.stream_id):
                if last_time is not None and env.originating_time <= last_time:
                    sc.problems.append(
                        f"non-monotonic time {env.originating_time} after {last_time}"
                    )
                    break
                last_time = env.originating_time
                sc.log_count += 1
        except StoreCorruption as exc:
            sc.problems.append(str(exc))
        tail = reader.torn_tails.get(desc.stream_id)
        if tail is not None:
            sc.torn_tail_bytes = tail.byte_count
            if catalog.clean_close:
                sc.problems.append(f"torn tail of {tail.byte_count} bytes after clean close")
        if sc.log_count < sc.catalog_count:
            sc.problems.append(f"log has {sc.log_count} frames, catalog recorded {sc.catalog_count}")
        elif sc.log_count > sc.catalog_count and catalog.clean_close:
            sc.problems.append(
                f"log has {sc.log_count} frames but clean-closed catalog recorded {sc.catalog_count}"
            )

    report.ok = not report.all_problems()
    return report
