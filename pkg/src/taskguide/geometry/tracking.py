"""Distance-based object track registry.

Deliberately simple: a detection joins the nearest same-label track within
merge_radius (ties to the lowest track id) and nudges its centroid by
exponential smoothing; otherwise it founds a new track. Tracks are never
evicted. A found event fires exactly once per track, at creation, carrying
the first observed centroid.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DEFAULT_MERGE_RADIUS_M = 0.25
DEFAULT_SMOOTHING_ALPHA = 0.5
DEFAULT_MIN_POINTS = 10


@dataclass(frozen=True)
class Detection3d:
    """A localized detection: label plus world centroid. Callers apply the
    min-points filter before constructing these."""

    label: str
    centroid: tuple[float, float, float]
    point_count: int


@dataclass
class TrackedObject:
    track_id: int
    label: str
    centroid: np.ndarray  # (3,) float64, exponentially smoothed
    point_count: int
    last_seen_ns: int


@dataclass(frozen=True)
class ObjectFound:
    track_id: int
    label: str
    position: tuple[float, float, float]  # first observed centroid


@dataclass
class ObjectTracker:
    merge_radius_m: float = DEFAULT_MERGE_RADIUS_M
    smoothing_alpha: float = DEFAULT_SMOOTHING_ALPHA
    tracks: dict[int, TrackedObject] = field(default_factory=dict)
    _next_id: int = 1

    def update(self, detections: list[Detection3d], time_ns: int) -> list[ObjectFound]:
        """Fold detections into the registry in input order; returns found events."""
        events: list[ObjectFound] = []
        for det in detections:
            obs = np.asarray(det.centroid, dtype=np.float64)
            best: tuple[float, int] | None = None
            for track in self.tracks.values():
                if track.label != det.label:
                    continue
                dist = float(np.linalg.norm(track.centroid - obs))
                if dist <= self.merge_radius_m and (best is None or (dist, track.track_id) < best):
                    best = (dist, track.track_id)
            if best is not None:
                track = self.tracks[best[1]]
                alpha = self.smoothing_alpha
                track.centroid = (1.0 - alpha) * track.centroid + alpha * obs
                track.point_count = det.point_count
                track.last_seen_ns = time_ns
            else:
                track = TrackedObject(self._next_id, det.label, obs.copy(), det.point_count, time_ns)
                self.tracks[track.track_id] = track
                self._next_id += 1
                events.append(ObjectFound(track.track_id, det.label, det.centroid))
        return events

    def by_label(self, label: str) -> list[TrackedObject]:
        return [t for t in self.tracks.values() if t.label == label]
