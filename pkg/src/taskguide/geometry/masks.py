"""Run-length encoded binary masks and mask -> point-cloud selection.

RLE layout: row-major flattened mask described by alternating run lengths
starting with a zero-run (possibly of length 0). Run lengths sum to
width*height.
"""

from __future__ import annotations

import numpy as np

from .camera import CameraModel, DepthPointCloud, Pose, nearest_pixel, project_points


class MaskError(ValueError):
    pass


def mask_to_rle(mask: np.ndarray) -> dict:
    mask = np.asarray(mask)
    if mask.ndim != 2 or mask.dtype != np.bool_:
        raise MaskError(f"expected 2-D boolean mask, got {mask.dtype} {mask.shape}")
    height, width = mask.shape
    flat = mask.ravel()
    if flat.size == 0:
        raise MaskError("empty mask")
    boundaries = np.flatnonzero(flat[1:] != flat[:-1]) + 1
    edges = np.concatenate(([0], boundaries, [flat.size]))
    runs = np.diff(edges).tolist()
    if flat[0]:
        runs = [0] + runs  # encoding always starts with a zero-run
    return {"width": int(width), "height": int(height), "runs": runs}


def rle_to_mask(obj: dict) -> np.ndarray:
    try:
        width, height, runs = int(obj["width"]), int(obj["height"]), obj["runs"]
    except (KeyError, TypeError, ValueError) as exc:
        raise MaskError(f"malformed rle object: {exc!r}") from exc
    if width <= 0 or height <= 0:
        raise MaskError("non-positive mask dimensions")
    if not isinstance(runs, list) or not all(isinstance(r, int) and r >= 0 for r in runs):
        raise MaskError("runs must be non-negative integers")
    total = sum(runs)
    if total != width * height:
        raise MaskError(f"runs sum to {total}, expected {width * height}")
    flat = np.zeros(width * height, dtype=np.bool_)
    pos = 0
    value = False
    for run in runs:
        if value:
            flat[pos : pos + run] = True
        pos += run
        value = not value
    return flat.reshape(height, width)


def mask_subcloud(
    cloud: DepthPointCloud,
    mask: np.ndarray,
    model: CameraModel,
    camera_to_world: Pose,
) -> np.ndarray:
    """Indices of cloud points that project into True pixels of `mask`.

    The mask lives in the image plane of (`model`, `camera_to_world`), which
    is typically a different camera than the one the cloud came from.
    """
    mask = np.asarray(mask)
    if mask.shape != (model.height, model.width):
        raise MaskError(f"mask shape {mask.shape} does not match camera {model.height}x{model.width}")
    if len(cloud) == 0:
        return np.empty(0, dtype=np.int64)
    uv, valid = project_points(cloud.points_world, model, camera_to_world)
    px = np.zeros((len(cloud), 2), dtype=np.int64)
    px[valid] = nearest_pixel(uv[valid])
    in_bounds = valid & (px[:, 0] >= 0) & (px[:, 0] < model.width) & (px[:, 1] >= 0) & (px[:, 1] < model.height)
    selected = np.zeros(len(cloud), dtype=np.bool_)
    idx = np.nonzero(in_bounds)[0]
    selected[idx] = mask[px[idx, 1], px[idx, 0]]
    return np.nonzero(selected)[0]


def centroid_of(cloud: DepthPointCloud, indices: np.ndarray) -> np.ndarray:
    if len(indices) == 0:
        raise ValueError("cannot take the centroid of no points")
    return cloud.points_world[indices].mean(axis=0)
