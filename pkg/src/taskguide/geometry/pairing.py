"""RGB/depth frame pairing by timestamp.

Each depth frame claims the nearest unclaimed RGB frame within tolerance,
resolving depth frames in time order; equidistant candidates go to the
earlier RGB. Every RGB frame is used at most once. Unmatched frames are
dropped and counted.

The online pairer only settles a depth frame once no better RGB can still
arrive (exact match seen, or RGB time has advanced past the window, or the
stream ended), so its output is identical to the offline pass over the full
streams.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Any, Iterable


@dataclass(frozen=True)
class FramePair:
    rgb_time: int
    depth_time: int
    rgb: Any
    depth: Any


@dataclass
class PairingStats:
    paired: int = 0
    dropped_rgb: int = 0
    dropped_depth: int = 0


@dataclass
class RgbdPairer:
    tolerance_ns: int
    stats: PairingStats = field(default_factory=PairingStats)
    _rgb: deque = field(default_factory=deque)  # (time, frame), unclaimed
    _depth: deque = field(default_factory=deque)
    _latest_rgb: int = -1
    _latest_depth: int = -1

    def push_rgb(self, time_ns: int, frame: Any) -> list[FramePair]:
        if time_ns <= self._latest_rgb:
            raise ValueError(f"rgb time {time_ns} not increasing past {self._latest_rgb}")
        self._latest_rgb = time_ns
        self._rgb.append((time_ns, frame))
        return self._drain(end=False)

    def push_depth(self, time_ns: int, frame: Any) -> list[FramePair]:
        if time_ns <= self._latest_depth:
            raise ValueError(f"depth time {time_ns} not increasing past {self._latest_depth}")
        self._latest_depth = time_ns
        self._depth.append((time_ns, frame))
        return self._drain(end=False)

    def flush(self) -> list[FramePair]:
        """Signal end of both streams; settles everything still pending."""
        return self._drain(end=True)

    def _best_candidate(self, depth_time: int) -> tuple[int, int] | None:
        """(distance, rgb_time) of the nearest unclaimed in-tolerance RGB."""
        best = None
        for rgb_time, _ in self._rgb:
            dist = abs(rgb_time - depth_time)
            if dist <= self.tolerance_ns and (best is None or dist < best[0]):
                best = (dist, rgb_time)  # strict < keeps the earlier frame on ties
        return best

    def _claim(self, rgb_time: int) -> Any:
        for i, (t, frame) in enumerate(self._rgb):
            if t == rgb_time:
                del self._rgb[i]
                return frame
        raise AssertionError("claimed rgb frame not in buffer")

    def _drain(self, end: bool) -> list[FramePair]:
        out: list[FramePair] = []
        while self._depth:
            depth_time, depth_frame = self._depth[0]
            best = self._best_candidate(depth_time)
            settled = (
                end
                or (best is not None and best[0] == 0)
                or self._latest_rgb >= depth_time + self.tolerance_ns
            )
            if not settled:
                break
            self._depth.popleft()
            if best is None:
                self.stats.dropped_depth += 1
                continue
            rgb_frame = self._claim(best[1])
            self.stats.paired += 1
            out.append(FramePair(best[1], depth_time, rgb_frame, depth_frame))
        # drop RGB frames that no pending or future depth frame can claim
        while self._rgb:
            rgb_time = self._rgb[0][0]
            matchable_pending = any(
                abs(d_time - rgb_time) <= self.tolerance_ns for d_time, _ in self._depth
            )
            matchable_future = rgb_time + self.tolerance_ns > self._latest_depth
            if not end and (matchable_pending or matchable_future):
                break
            if end and matchable_pending:
                break  # flush settles depths first; should not happen
            self._rgb.popleft()
            self.stats.dropped_rgb += 1
        return out


def pair_rgb_depth(
    rgb: Iterable[tuple[int, Any]],
    depth: Iterable[tuple[int, Any]],
    tolerance_ns: int,
) -> tuple[list[FramePair], PairingStats]:
    """Offline pairing of complete (time, frame) sequences."""
    pairer = RgbdPairer(tolerance_ns)
    pairs: list[FramePair] = []
    for time_ns, frame in rgb:
        pairs.extend(pairer.push_rgb(time_ns, frame))
    for time_ns, frame in depth:
        pairs.extend(pairer.push_depth(time_ns, frame))
    pairs.extend(pairer.flush())
    pairs.sort(key=lambda p: p.depth_time)
    return pairs, pairer.stats
