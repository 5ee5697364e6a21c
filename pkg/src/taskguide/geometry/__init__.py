from .camera import (
    CameraModel,
    DepthPointCloud,
    Pose,
    backproject_depth,
    nearest_pixel,
    project_points,
)
from .masks import MaskError, centroid_of, mask_subcloud, mask_to_rle, rle_to_mask
from .pairing import FramePair, PairingStats, RgbdPairer, pair_rgb_depth
from .tracking import (
    DEFAULT_MERGE_RADIUS_M,
    DEFAULT_MIN_POINTS,
    DEFAULT_SMOOTHING_ALPHA,
    Detection3d,
    ObjectFound,
    ObjectTracker,
    TrackedObject,
)

__all__ = [name for name in dir() if not name.startswith("_")]
