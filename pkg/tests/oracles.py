"""Brute-force reference implementations for derived behavior.

Everything here is written in scalar Python (math module, loops, no numpy
vectorization and no imports from the package under test) so tests compare
two genuinely independent derivations of the same contract.
"""

from __future__ import annotations

import math


# -- pinhole math ---------------------------------------------------------------


def mat_vec3(pose16: list[float], x: float, y: float, z: float) -> tuple[float, float, float]:
    """Apply a row-major 4x4 rigid transform to a point."""
    m = pose16
    return (
        m[0] * x + m[1] * y + m[2] * z + m[3],
        m[4] * x + m[5] * y + m[6] * z + m[7],
        m[8] * x + m[9] * y + m[10] * z + m[11],
    )


def invert_pose(pose16: list[float]) -> list[float]:
    m = pose16
    r = [[m[0], m[1], m[2]], [m[4], m[5], m[6]], [m[8], m[9], m[10]]]
    t = [m[3], m[7], m[11]]
    out = [0.0] * 16
    for i in range(3):
        for j in range(3):
            out[i * 4 + j] = r[j][i]  # transpose
        out[i * 4 + 3] = -(r[0][i] * t[0] + r[1][i] * t[1] + r[2][i] * t[2])
    out[15] = 1.0
    return out


def backproject_pixel(
    u: int, v: int, d_mm: float, fx: float, fy: float, cx: float, cy: float, pose16: list[float]
) -> tuple[float, float, float]:
    z = d_mm / 1000.0
    x = (u + 0.5 - cx) * z / fx
    y = (v + 0.5 - cy) * z / fy
    return mat_vec3(pose16, x, y, z)


def project_point(
    px: float, py: float, pz: float, fx: float, fy: float, cx: float, cy: float, pose16: list[float]
) -> tuple[float, float] | None:
    """World point -> continuous pixel coords, None if at/behind the camera."""
    inv = invert_pose(pose16)
    x, y, z = mat_vec3(inv, px, py, pz)
    if z <= 0:
        return None
    return fx * x / z + cx - 0.5, fy * y / z + cy - 0.5


def nearest_pixel_1d(coord: float) -> int:
    return math.floor(coord + 0.5)


def subcloud_pixel_set(
    depth_mm,
    depth_cam: dict,
    depth_pose16: list[float],
    mask,
    rgb_cam: dict,
    rgb_pose16: list[float],
    max_range_mm: int,
) -> set[tuple[int, int]]:
    """Depth pixels whose back-projected point lands in a True RGB mask pixel."""
    selected = set()
    for v in range(depth_cam["height"]):
        for u in range(depth_cam["width"]):
            d = float(depth_mm[v][u])
            if d <= 0 or d > max_range_mm:
                continue
            p = backproject_pixel(u, v, d, depth_cam["fx"], depth_cam["fy"], depth_cam["cx"], depth_cam["cy"], depth_pose16)
            uv = project_point(*p, rgb_cam["fx"], rgb_cam["fy"], rgb_cam["cx"], rgb_cam["cy"], rgb_pose16)
            if uv is None:
                continue
            pu, pv = nearest_pixel_1d(uv[0]), nearest_pixel_1d(uv[1])
            if 0 <= pu < rgb_cam["width"] and 0 <= pv < rgb_cam["height"] and mask[pv][pu]:
                selected.add((u, v))
    return selected


def centroid(points: list[tuple[float, float, float]]) -> tuple[float, float, float]:
    sx = sy = sz = 0.0
    for x, y, z in points:
        sx += x
        sy += y
        sz += z
    n = len(points)
    return sx / n, sy / n, sz / n


# -- rgb/depth pairing ----------------------------------------------------------


def pair_frames(
    rgb_times: list[int], depth_times: list[int], tolerance: int
) -> tuple[list[tuple[int, int]], int, int]:
    """Returns ((rgb_time, depth_time) pairs in depth order, dropped_rgb, dropped_depth)."""
    claimed: set[int] = set()
    pairs: list[tuple[int, int]] = []
    dropped_depth = 0
    for td in sorted(depth_times):
        best = None  # (dist, rgb_time)
        for tr in rgb_times:
            if tr in claimed:
                continue
            dist = abs(tr - td)
            if dist > tolerance:
                continue
            if best is None or dist < best[0] or (dist == best[0] and tr < best[1]):
                best = (dist, tr)
        if best is None:
            dropped_depth += 1
        else:
            claimed.add(best[1])
            pairs.append((best[1], td))
    dropped_rgb = len(rgb_times) - len(claimed)
    return pairs, dropped_rgb, dropped_depth


# -- track registry ---------------------------------------------------------------


def track_objects(
    observations: list[tuple[str, tuple[float, float, float]]],
    merge_radius: float,
    alpha: float,
) -> tuple[list[dict], list[tuple[int, str, tuple[float, float, float]]]]:
    """Greedy nearest-track folding. Returns (final tracks, found events)."""
    tracks: list[dict] = []
    found: list[tuple[int, str, tuple[float, float, float]]] = []
    next_id = 1
    for label, obs in observations:
        best = None  # (dist, index)
        for i, track in enumerate(tracks):
            if track["label"] != label:
                continue
            c = track["centroid"]
            dist = math.sqrt((c[0] - obs[0]) ** 2 + (c[1] - obs[1]) ** 2 + (c[2] - obs[2]) ** 2)
            if dist > merge_radius:
                continue
            if best is None or dist < best[0] or (dist == best[0] and track["track_id"] < tracks[best[1]]["track_id"]):
                best = (dist, i)
        if best is None:
            tracks.append({"track_id": next_id, "label": label, "centroid": obs})
            found.append((next_id, label, obs))
            next_id += 1
        else:
            track = tracks[best[1]]
            c = track["centroid"]
            track["centroid"] = (
                (1 - alpha) * c[0] + alpha * obs[0],
                (1 - alpha) * c[1] + alpha * obs[1],
                (1 - alpha) * c[2] + alpha * obs[2],
            )
    return tracks, found


# -- run-length encoding ------------------------------------------------------------


def rle_runs(flat: list[bool]) -> list[int]:
    """Alternating run lengths starting with a zero-run (possibly empty)."""
    runs: list[int] = []
    value = False
    count = 0
    for bit in flat:
        if bit == value:
            count += 1
        else:
            runs.append(count)
            value = bit
            count = 1
    runs.append(count)
    return runs
