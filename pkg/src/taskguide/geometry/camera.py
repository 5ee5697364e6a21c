"""Pinhole camera math.

Conventions (normative for every camera in the system):
  - camera frame: +z forward along the optical axis, +x right, +y = z cross x
  - pixel (u, v) covers the unit square [u, u+1) x [v, v+1); its center sits at
    (u + 0.5, v + 0.5) in continuous image coordinates
  - depth values are z-depth (distance along the optical axis), not ray length
  - poses are camera-to-world rigid transforms, row-major 4x4
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_EYE4 = np.eye(4)


def _validate_rigid(mat: np.ndarray) -> None:
    if mat.shape != (4, 4):
        raise ValueError(f"pose must be 4x4, got {mat.shape}")
    if not np.all(np.isfinite(mat)):
        raise ValueError("pose has non-finite entries")
    if np.max(np.abs(mat[3] - _EYE4[3])) > 1e-9:
        raise ValueError("pose bottom row must be (0,0,0,1)")
    rot = mat[:3, :3]
    if np.max(np.abs(rot.T @ rot - np.eye(3))) > 1e-4:
        raise ValueError("pose rotation is not orthonormal")


@dataclass(frozen=True)
class Pose:
    """Rigid camera-to-world (or rig-to-world) transform."""

    matrix: np.ndarray  # (4,4) float64

    def __post_init__(self) -> None:
        mat = np.asarray(self.matrix, dtype=np.float64)
        _validate_rigid(mat)
        mat = mat.copy()
        mat.flags.writeable = False
        object.__setattr__(self, "matrix", mat)

    @staticmethod
    def identity() -> "Pose":
        return Pose(_EYE4)

    @staticmethod
    def from_rotation_translation(rotation: np.ndarray, translation: np.ndarray) -> "Pose":
        mat = np.eye(4)
        mat[:3, :3] = rotation
        mat[:3, 3] = translation
        return Pose(mat)

    @staticmethod
    def look_at(position, target, world_up=(0.0, 1.0, 0.0)) -> "Pose":
        """Camera at `position` with +z pointing at `target`.

        Orthonormal by construction, which keeps interpolated trajectories
        valid poses at every sample.
        """
        position = np.asarray(position, dtype=np.float64)
        forward = np.asarray(target, dtype=np.float64) - position
        norm = np.linalg.norm(forward)
        if norm < 1e-12:
            raise ValueError("look_at target coincides with position")
        z = forward / norm
        up = np.asarray(world_up, dtype=np.float64)
        x = np.cross(up, z)
        xnorm = np.linalg.norm(x)
        if xnorm < 1e-9:
            # looking straight along world_up; pick an arbitrary stable right vector
            x = np.cross(np.array([0.0, 0.0, 1.0]), z)
            xnorm = np.linalg.norm(x)
        x = x / xnorm
        y = np.cross(z, x)
        rot = np.stack([x, y, z], axis=1)
        return Pose.from_rotation_translation(rot, position)

    @property
    def rotation(self) -> np.ndarray:
        return self.matrix[:3, :3]

    @property
    def translation(self) -> np.ndarray:
        return self.matrix[:3, 3]

    def compose(self, other: "Pose") -> "Pose":
        """self applied after other: (self.compose(other)).transform(p) == self(other(p))."""
        return Pose(self.matrix @ other.matrix)

    def inverse(self) -> "Pose":
        rot_t = self.rotation.T
        inv = np.eye(4)
        inv[:3, :3] = rot_t
        inv[:3, 3] = -rot_t @ self.translation
        return Pose(inv)

    def transform_points(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=np.float64)
        single = pts.ndim == 1
        pts = np.atleast_2d(pts)
        out = pts @ self.rotation.T + self.translation
        return out[0] if single else out


@dataclass(frozen=True)
class CameraModel:
    width: int
    height: int
    fx: float
    fy: float
    cx: float
    cy: float

    def __post_init__(self) -> None:
        if self.width <= 0 or self.height <= 0:
            raise ValueError("non-positive image dimensions")
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("non-positive focal length")

    @staticmethod
    def from_frame(frame) -> "CameraModel":
        """Build from any object with width/height/fx/fy/cx/cy attributes."""
        return CameraModel(frame.width, frame.height, frame.fx, frame.fy, frame.cx, frame.cy)


@dataclass(frozen=True)
class DepthPointCloud:
    """World-frame points with their source depth-pixel provenance."""

    points_world: np.ndarray  # (N,3) float64
    pixels: np.ndarray  # (N,2) int32 (u,v), row-major scan order

    def __len__(self) -> int:
        return len(self.points_world)


def backproject_depth(
    depth_mm: np.ndarray,
    model: CameraModel,
    camera_to_world: Pose,
    max_range_mm: int | None = None,
) -> DepthPointCloud:
    """Lift a millimetre depth image to a world-frame point cloud.

    Zero depth means no measurement. Points are emitted in row-major pixel
    order, which downstream consumers and oracles rely on.
    """
    depth_mm = np.asarray(depth_mm)
    if depth_mm.shape != (model.height, model.width):
        raise ValueError(f"depth shape {depth_mm.shape} does not match model {model.height}x{model.width}")
    valid = depth_mm > 0
    if max_range_mm is not None:
        valid &= depth_mm <= max_range_mm
    v_idx, u_idx = np.nonzero(valid)
    z = depth_mm[v_idx, u_idx].astype(np.float64) / 1000.0
    x = (u_idx + 0.5 - model.cx) * z / model.fx
    y = (v_idx + 0.5 - model.cy) * z / model.fy
    cam_points = np.stack([x, y, z], axis=1)
    world = camera_to_world.transform_points(cam_points)
    pixels = np.stack([u_idx, v_idx], axis=1).astype(np.int32)
    return DepthPointCloud(world, pixels)


def project_points(
    points_world: np.ndarray,
    model: CameraModel,
    camera_to_world: Pose,
) -> tuple[np.ndarray, np.ndarray]:
    """Project world points into continuous pixel coordinates.

    Returns (uv (N,2) float64, valid (N,) bool). Points at or behind the
    camera plane (z <= 0) are invalid and their uv is NaN.
    """
    pts = np.atleast_2d(np.asarray(points_world, dtype=np.float64))
    cam = camera_to_world.inverse().transform_points(pts)
    z = cam[:, 2]
    valid = z > 0
    uv = np.full((len(pts), 2), np.nan)
    zv = z[valid]
    uv[valid, 0] = model.fx * cam[valid, 0] / zv + model.cx - 0.5
    uv[valid, 1] = model.fy * cam[valid, 1] / zv + model.cy - 0.5
    return uv, valid


def nearest_pixel(uv: np.ndarray) -> np.ndarray:
    """Continuous pixel coordinates -> index of the pixel whose center is nearest.

    floor(u + 0.5): exact .5 boundaries round up, matching the oracle definition.
    """
    return np.floor(np.asarray(uv) + 0.5).astype(np.int64)
