"""Analytic sphere scenes.

One renderer serves three consumers: the sim client's depth camera, the mock
object detector's label masks, and geometry tests that need ground truth. All
of them must agree on the same ray math, so it lives in one place.

Depth is z-depth along the optical axis (the ray direction for pixel (u,v)
is ((u+0.5-cx)/fx, (v+0.5-cy)/fy, 1), so the ray parameter t *is* the
z-depth). The float renderer is exact; wire frames quantize to uint16
millimetres via to_depth16.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import CameraModel, Pose

DEFAULT_MAX_RANGE_MM = 4000


@dataclass(frozen=True)
class SphereObject:
    label: str
    center: tuple[float, float, float]  # world frame, metres
    radius_m: float

    def __post_init__(self) -> None:
        if self.radius_m <= 0:
            raise ValueError("sphere radius must be positive")
        if not self.label:
            raise ValueError("sphere needs a label")


@dataclass(frozen=True)
class SphereScene:
    objects: tuple[SphereObject, ...]

    @staticmethod
    def from_json_obj(obj: dict) -> "SphereScene":
        spheres = []
        for raw in obj["objects"]:
            center = raw["center"]
            if not (isinstance(center, list) and len(center) == 3):
                raise ValueError(f"sphere center must be [x,y,z], got {center!r}")
            spheres.append(SphereObject(str(raw["label"]), tuple(float(c) for c in center), float(raw["radius_m"])))
        return SphereScene(tuple(spheres))

    def to_json_obj(self) -> dict:
        return {
            "objects": [
                {"label": s.label, "center": list(s.center), "radius_m": s.radius_m} for s in self.objects
            ]
        }

    def labels(self) -> list[str]:
        seen: list[str] = []
        for s in self.objects:
            if s.label not in seen:
                seen.append(s.label)
        return seen


def _pixel_rays(model: CameraModel) -> np.ndarray:
    """(H,W,3) unnormalized ray directions through each pixel center, camera frame."""
    u = np.arange(model.width, dtype=np.float64)
    v = np.arange(model.height, dtype=np.float64)
    dx = (u + 0.5 - model.cx) / model.fx
    dy = (v + 0.5 - model.cy) / model.fy
    dirs = np.empty((model.height, model.width, 3))
    dirs[:, :, 0] = dx[np.newaxis, :]
    dirs[:, :, 1] = dy[:, np.newaxis]
    dirs[:, :, 2] = 1.0
    return dirs


def _sphere_hit_depths(scene: SphereScene, model: CameraModel, camera_to_world: Pose) -> np.ndarray:
    """(K,H,W) z-depth of the nearest intersection per object, +inf where missed."""
    dirs = _pixel_rays(model)
    a = np.einsum("hwc,hwc->hw", dirs, dirs)
    world_to_cam = camera_to_world.inverse()
    hits = np.full((len(scene.objects), model.height, model.width), np.inf)
    for k, sphere in enumerate(scene.objects):
        center_cam = world_to_cam.transform_points(np.asarray(sphere.center))
        b = -2.0 * (dirs @ center_cam)
        c = float(center_cam @ center_cam) - sphere.radius_m**2
        disc = b * b - 4.0 * a * c
        hit = disc >= 0
        sq = np.sqrt(np.where(hit, disc, 0.0))
        t_near = (-b - sq) / (2.0 * a)
        t_far = (-b + sq) / (2.0 * a)
        # nearest strictly-positive root; inside a sphere we see its far wall
        t = np.where(t_near > 0, t_near, t_far)
        hits[k] = np.where(hit & (t > 0), t, np.inf)
    return hits


def render_depth_z(
    scene: SphereScene,
    model: CameraModel,
    camera_to_world: Pose,
    max_range_mm: int = DEFAULT_MAX_RANGE_MM,
) -> np.ndarray:
    """(H,W) float64 z-depth in metres; 0 where no hit or beyond max range."""
    if not scene.objects:
        return np.zeros((model.height, model.width))
    z = np.min(_sphere_hit_depths(scene, model, camera_to_world), axis=0)
    z[~np.isfinite(z)] = 0.0
    z[z * 1000.0 > max_range_mm] = 0.0
    return z


def to_depth16(z_metres: np.ndarray) -> np.ndarray:
    """Quantize float z-depth (metres) to the wire's uint16 millimetre format."""
    mm = np.rint(np.asarray(z_metres) * 1000.0)
    return np.clip(mm, 0, 65535).astype(np.uint16)


def render_label_masks(
    scene: SphereScene,
    model: CameraModel,
    camera_to_world: Pose,
    labels: list[str],
    max_range_mm: int = DEFAULT_MAX_RANGE_MM,
) -> dict[str, np.ndarray]:
    """Nearest-hit visibility mask per requested label.

    A pixel belongs to the object whose surface is closest along its ray
    (ties to the lowest object index), mirroring what a segmenter would see.
    Labels with no visible pixels map to an all-False mask.
    """
    masks = {label: np.zeros((model.height, model.width), dtype=np.bool_) for label in labels}
    if not scene.objects:
        return masks
    hits = _sphere_hit_depths(scene, model, camera_to_world)
    nearest = np.min(hits, axis=0)
    visible = np.isfinite(nearest) & (nearest * 1000.0 <= max_range_mm)
    winner = np.argmin(hits, axis=0)
    for k, sphere in enumerate(scene.objects):
        if sphere.label in masks:
            masks[sphere.label] |= visible & (winner == k)
    return masks
