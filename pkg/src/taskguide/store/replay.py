"""Replay delivery with pacing.

AS_FAST delivers as quickly as the sink accepts. real_time(scale) reproduces
recorded inter-envelope gaps divided by `scale` (2.0 plays back at twice
recorded speed). Pacing affects wall-clock delivery only; delivery order is
always the merged (originating_time, stream_id) order.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator

from ..wire import SensorEnvelope
from .reader import SessionReader


@dataclass(frozen=True)
class Pacing:
    mode: str  # "as_fast" | "real_time"
    scale: float = 1.0

    def __post_init__(self) -> None:
        if self.mode not in ("as_fast", "real_time"):
            raise ValueError(f"unknown pacing mode {self.mode!r}")
        if self.scale <= 0:
            raise ValueError("scale must be positive")


AS_FAST = Pacing("as_fast")


def real_time(scale: float = 1.0) -> Pacing:
    return Pacing("real_time", scale)


def paced(
    envelopes: Iterable[SensorEnvelope],
    pacing: Pacing,
    _sleep: Callable[[float], None] = time.sleep,
    _clock: Callable[[], float] = time.monotonic,
) -> Iterator[SensorEnvelope]:
    """Yield envelopes, sleeping to honor pacing. Late frames are never skipped."""
    if pacing.mode == "as_fast":
        yield from envelopes
        return
    start_wall: float | None = None
    start_time: int | None = None
    for env in envelopes:
        if start_wall is None:
            start_wall = _clock()
            start_time = env.originating_time
        else:
            target = start_wall + (env.originating_time - start_time) / 1e9 / pacing.scale
            delay = target - _clock()
            if delay > 0:
                _sleep(delay)
        yield env


def replay_session(
    reader: SessionReader,
    sink: Callable[[SensorEnvelope], None],
    pacing: Pacing = AS_FAST,
    from_time: int | None = None,
    to_time: int | None = None,
    stream_ids: list[int] | None = None,
    _sleep: Callable[[float], None] = time.sleep,
    _clock: Callable[[], float] = time.monotonic,
) -> int:
    """Deliver merged envelopes to sink. Returns the number delivered."""
    n = 0
    merged = reader.iter_merged(from_time, to_time, stream_ids)
    for env in paced(merged, pacing, _sleep, _clock):
        sink(env)
        n += 1
    return n
