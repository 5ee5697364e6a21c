"""Typed payload codecs for each stream kind.

Binary layouts are little-endian and documented field by field in the README.
Matrices travel as row-major float32. JSON-bodied kinds (interface state and
the server-derived streams) use canonical JSON: sorted keys, compact
separators, UTF-8. Canonical form makes payload bytes a pure function of
content, which the replay determinism guarantees lean on.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Union

import numpy as np

from .errors import SchemaViolation


class StreamKind(str, Enum):
    RGB_CAMERA = "rgb_camera"
    PREVIEW_CAMERA = "preview_camera"
    DEPTH_CAMERA = "depth_camera"
    EYE_GAZE = "eye_gaze"
    HEAD_POSE = "head_pose"
    HANDS = "hands"
    AUDIO = "audio"
    TEXT_INPUT = "text_input"
    INTERFACE_STATE = "interface_state"
    INTERFACE_COMMAND = "interface_command"
    DETECTION = "detection"
    LLM_TRACE = "llm_trace"
    CONTROLLER_TRACE = "controller_trace"


# Kinds a client may declare in its manifest. The rest only ever originate
# server-side (injected or derived).
CLIENT_KINDS = frozenset(
    {
        StreamKind.RGB_CAMERA,
        StreamKind.PREVIEW_CAMERA,
        StreamKind.DEPTH_CAMERA,
        StreamKind.EYE_GAZE,
        StreamKind.HEAD_POSE,
        StreamKind.HANDS,
        StreamKind.AUDIO,
        StreamKind.TEXT_INPUT,
        StreamKind.INTERFACE_STATE,
    }
)

DERIVED_KINDS = frozenset(
    {
        StreamKind.INTERFACE_COMMAND,
        StreamKind.DETECTION,
        StreamKind.LLM_TRACE,
        StreamKind.CONTROLLER_TRACE,
    }
)


class PixelEncoding(int, Enum):
    NV12 = 1
    DEPTH16 = 2


# 26 joints per hand, fixed order. Index 0 is the palm.
HAND_JOINT_NAMES: tuple[str, ...] = (
    "palm",
    "wrist",
    "thumb_metacarpal",
    "thumb_proximal",
    "thumb_distal",
    "thumb_tip",
    "index_metacarpal",
    "index_proximal",
    "index_intermediate",
    "index_distal",
    "index_tip",
    "middle_metacarpal",
    "middle_proximal",
    "middle_intermediate",
    "middle_distal",
    "middle_tip",
    "ring_metacarpal",
    "ring_proximal",
    "ring_intermediate",
    "ring_distal",
    "ring_tip",
    "little_metacarpal",
    "little_proximal",
    "little_intermediate",
    "little_distal",
    "little_tip",
)
HAND_JOINT_COUNT = len(HAND_JOINT_NAMES)
assert HAND_JOINT_COUNT == 26


def canonical_json_bytes(obj: Any) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False).encode("utf-8")


def decode_json_object(payload: bytes, kind: str) -> dict:
    try:
        obj = json.loads(payload.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise SchemaViolation(f"{kind}: payload is not UTF-8 JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise SchemaViolation(f"{kind}: top-level JSON value must be an object")
    return obj


def check_pose_matrix(mat: np.ndarray, what: str) -> None:
    """Rigid-transform sanity: bottom row (0,0,0,1) and orthonormal rotation.

    Tolerances allow float32 transport: 1e-6 on the affine row, 1e-4 on
    orthonormality of the upper-left 3x3.
    """
    if mat.shape != (4, 4):
        raise SchemaViolation(f"{what}: expected 4x4 matrix, got {mat.shape}")
    if not np.all(np.isfinite(mat)):
        raise SchemaViolation(f"{what}: non-finite matrix entries")
    if np.max(np.abs(mat[3] - np.array([0.0, 0.0, 0.0, 1.0]))) > 1e-6:
        raise SchemaViolation(f"{what}: bottom row must be (0,0,0,1), got {mat[3].tolist()}")
    rot = mat[:3, :3]
    err = np.max(np.abs(rot.T @ rot - np.eye(3)))
    if err > 1e-4:
        raise SchemaViolation(f"{what}: rotation not orthonormal (max deviation {err:.2e})")


# -- camera frames ------------------------------------------------------------

# encoding u8, width u16, height u16, fx/fy/cx/cy f32, camera_to_world 16*f32,
# pixel_len u32. 89 bytes, then the pixel buffer.
_CAMERA_HEADER = struct.Struct("<BHH4f16fI")


def nv12_size(width: int, height: int) -> int:
    return width * height * 3 // 2


def depth16_size(width: int, height: int) -> int:
    return width * height * 2


@dataclass(frozen=True)
class CameraFramePayload:
    encoding: PixelEncoding
    width: int
    height: int
    fx: float
    fy: float
    cx: float
    cy: float
    camera_to_world: np.ndarray  # (4,4) float64
    pixels: bytes

    def expected_pixel_len(self) -> int:
        if self.encoding is PixelEncoding.NV12:
            return nv12_size(self.width, self.height)
        return depth16_size(self.width, self.height)

    def depth_mm(self) -> np.ndarray:
        """(H,W) uint16 view of a DEPTH16 frame, values in millimetres."""
        if self.encoding is not PixelEncoding.DEPTH16:
            raise ValueError("not a depth frame")
        return np.frombuffer(self.pixels, dtype="<u2").reshape(self.height, self.width)


def encode_camera_frame(frame: CameraFramePayload) -> bytes:
    ext = np.asarray(frame.camera_to_world, dtype=np.float64).reshape(4, 4)
    head = _CAMERA_HEADER.pack(
        frame.encoding.value,
        frame.width,
        frame.height,
        frame.fx,
        frame.fy,
        frame.cx,
        frame.cy,
        *ext.astype(np.float32).ravel().tolist(),
        len(frame.pixels),
    )
    return head + frame.pixels


def decode_camera_frame(payload: bytes, kind: StreamKind) -> CameraFramePayload:
    if len(payload) < _CAMERA_HEADER.size:
        raise SchemaViolation(f"camera frame: payload shorter than {_CAMERA_HEADER.size}-byte header")
    fields = _CAMERA_HEADER.unpack_from(payload)
    enc_raw, width, height = fields[0], fields[1], fields[2]
    fx, fy, cx, cy = fields[3:7]
    ext = np.array(fields[7:23], dtype=np.float64).reshape(4, 4)
    pixel_len = fields[23]
    try:
        encoding = PixelEncoding(enc_raw)
    except ValueError:
        raise SchemaViolation(f"camera frame: unknown pixel encoding {enc_raw}") from None
    if kind is StreamKind.DEPTH_CAMERA and encoding is not PixelEncoding.DEPTH16:
        raise SchemaViolation("depth stream requires DEPTH16 encoding")
    if kind in (StreamKind.RGB_CAMERA, StreamKind.PREVIEW_CAMERA) and encoding is not PixelEncoding.NV12:
        raise SchemaViolation(f"{kind.value} stream requires NV12 encoding")
    if width <= 0 or height <= 0:
        raise SchemaViolation("camera frame: non-positive dimensions")
    if encoding is PixelEncoding.NV12 and (width % 2 or height % 2):
        raise SchemaViolation("NV12 requires even dimensions")
    if fx <= 0 or fy <= 0 or not all(math.isfinite(v) for v in (fx, fy, cx, cy)):
        raise SchemaViolation("camera frame: bad intrinsics")
    check_pose_matrix(ext, "camera extrinsics")
    pixels = payload[_CAMERA_HEADER.size :]
    if len(pixels) != pixel_len:
        raise SchemaViolation(f"camera frame: declared {pixel_len} pixel bytes, got {len(pixels)}")
    frame = CameraFramePayload(encoding, width, height, fx, fy, cx, cy, ext, pixels)
    if pixel_len != frame.expected_pixel_len():
        raise SchemaViolation(
            f"camera frame: {encoding.name} {width}x{height} needs "
            f"{frame.expected_pixel_len()} pixel bytes, got {pixel_len}"
        )
    return frame


# -- gaze ----------------------------------------------------------------------

_GAZE = struct.Struct("<3f3f")


@dataclass(frozen=True)
class GazePayload:
    position: np.ndarray  # (3,) float64, metres, world frame
    direction: np.ndarray  # (3,) float64, unit norm


def encode_gaze(gaze: GazePayload) -> bytes:
    pos = np.asarray(gaze.position, dtype=np.float64)
    direction = np.asarray(gaze.direction, dtype=np.float64)
    norm = np.linalg.norm(direction)
    if norm == 0 or not np.isfinite(norm):
        raise SchemaViolation("gaze: zero or non-finite direction")
    direction = direction / norm
    return _GAZE.pack(*pos.astype(np.float32), *direction.astype(np.float32))


def decode_gaze(payload: bytes) -> GazePayload:
    if len(payload) != _GAZE.size:
        raise SchemaViolation(f"gaze: expected {_GAZE.size} bytes, got {len(payload)}")
    vals = _GAZE.unpack(payload)
    pos = np.array(vals[:3], dtype=np.float64)
    direction = np.array(vals[3:], dtype=np.float64)
    if not (np.all(np.isfinite(pos)) and np.all(np.isfinite(direction))):
        raise SchemaViolation("gaze: non-finite values")
    norm = float(np.linalg.norm(direction))
    if abs(norm - 1.0) > 1e-6:
        raise SchemaViolation(f"gaze: direction norm {norm} outside 1 +/- 1e-6")
    return GazePayload(pos, direction)


# -- head pose -------------------------------------------------------------------

_POSE = struct.Struct("<16f")


@dataclass(frozen=True)
class PosePayload:
    matrix: np.ndarray  # (4,4) float64, row-major, rig-to-world


def encode_pose(pose: PosePayload) -> bytes:
    mat = np.asarray(pose.matrix, dtype=np.float64).reshape(4, 4)
    return _POSE.pack(*mat.astype(np.float32).ravel().tolist())


def decode_pose(payload: bytes) -> PosePayload:
    if len(payload) != _POSE.size:
        raise SchemaViolation(f"pose: expected {_POSE.size} bytes, got {len(payload)}")
    mat = np.array(_POSE.unpack(payload), dtype=np.float64).reshape(4, 4)
    check_pose_matrix(mat, "head pose")
    return PosePayload(mat)


# -- hands -----------------------------------------------------------------------

_HAND_FLAGS = struct.Struct("<BB")
_HAND_JOINTS = struct.Struct(f"<{HAND_JOINT_COUNT * 16}f")


@dataclass(frozen=True)
class HandsPayload:
    left: np.ndarray | None  # (26,4,4) float64 joint poses, or None if not tracked
    right: np.ndarray | None


def _encode_hand(joints: np.ndarray) -> bytes:
    arr = np.asarray(joints, dtype=np.float64)
    if arr.shape != (HAND_JOINT_COUNT, 4, 4):
        raise SchemaViolation(f"hand: expected (26,4,4) joints, got {arr.shape}")
    return _HAND_JOINTS.pack(*arr.astype(np.float32).ravel().tolist())


def encode_hands(hands: HandsPayload) -> bytes:
    out = _HAND_FLAGS.pack(hands.left is not None, hands.right is not None)
    if hands.left is not None:
        out += _encode_hand(hands.left)
    if hands.right is not None:
        out += _encode_hand(hands.right)
    return out


def _decode_hand(payload: bytes, offset: int, which: str) -> tuple[np.ndarray, int]:
    if len(payload) - offset < _HAND_JOINTS.size:
        raise SchemaViolation(f"hands: truncated {which} hand block")
    vals = _HAND_JOINTS.unpack_from(payload, offset)
    joints = np.array(vals, dtype=np.float64).reshape(HAND_JOINT_COUNT, 4, 4)
    for i in range(HAND_JOINT_COUNT):
        check_pose_matrix(joints[i], f"{which} hand joint {HAND_JOINT_NAMES[i]}")
    return joints, offset + _HAND_JOINTS.size


def decode_hands(payload: bytes) -> HandsPayload:
    if len(payload) < _HAND_FLAGS.size:
        raise SchemaViolation("hands: missing presence flags")
    left_flag, right_flag = _HAND_FLAGS.unpack_from(payload)
    if left_flag not in (0, 1) or right_flag not in (0, 1):
        raise SchemaViolation("hands: presence flags must be 0 or 1")
    offset = _HAND_FLAGS.size
    left = right = None
    if left_flag:
        left, offset = _decode_hand(payload, offset, "left")
    if right_flag:
        right, offset = _decode_hand(payload, offset, "right")
    if offset != len(payload):
        raise SchemaViolation(f"hands: {len(payload) - offset} trailing bytes")
    return HandsPayload(left, right)


# -- audio ----------------------------------------------------------------------

_AUDIO_HEADER = struct.Struct("<I")


@dataclass(frozen=True)
class AudioPayload:
    sample_rate_hz: int
    samples: np.ndarray  # (N,) float32 mono PCM in [-1, 1]


def encode_audio(audio: AudioPayload) -> bytes:
    samples = np.asarray(audio.samples, dtype=np.float32)
    return _AUDIO_HEADER.pack(audio.sample_rate_hz) + samples.tobytes()


def decode_audio(payload: bytes) -> AudioPayload:
    if len(payload) < _AUDIO_HEADER.size + 4:
        raise SchemaViolation("audio: need a sample rate and at least one sample")
    (rate,) = _AUDIO_HEADER.unpack_from(payload)
    if rate <= 0:
        raise SchemaViolation("audio: non-positive sample rate")
    body = payload[_AUDIO_HEADER.size :]
    if len(body) % 4:
        raise SchemaViolation("audio: sample bytes not a multiple of 4")
    samples = np.frombuffer(body, dtype="<f4")
    if not np.all(np.isfinite(samples)):
        raise SchemaViolation("audio: non-finite samples")
    peak = float(np.max(np.abs(samples)))
    if peak > 1.0:
        raise SchemaViolation(f"audio: sample magnitude {peak} exceeds 1.0")
    return AudioPayload(rate, samples)


# -- text input --------------------------------------------------------------------


@dataclass(frozen=True)
class TextInputPayload:
    text: str


def encode_text_input(text: TextInputPayload) -> bytes:
    return text.text.encode("utf-8")


def decode_text_input(payload: bytes) -> TextInputPayload:
    try:
        text = payload.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise SchemaViolation(f"text input: invalid UTF-8: {exc}") from exc
    if not text.strip():
        raise SchemaViolation("text input: empty text")
    return TextInputPayload(text)


# -- interface state ------------------------------------------------------------------


@dataclass(frozen=True)
class SynthesisEvent:
    utterance_id: int
    kind: str  # "started" | "finished"


@dataclass(frozen=True)
class InterfaceStatePayload:
    """Client-reported UI state: palm gesture flag, panel pose, speech synthesis progress."""

    palm_open_up: bool = False
    panel_pose: tuple[float, ...] | None = None  # row-major 4x4 when the panel is placed
    synthesis: SynthesisEvent | None = None

    def to_json_obj(self) -> dict:
        obj: dict[str, Any] = {"palm_open_up": self.palm_open_up}
        if self.panel_pose is not None:
            obj["panel_pose"] = list(self.panel_pose)
        if self.synthesis is not None:
            obj["synthesis"] = {"utterance_id": self.synthesis.utterance_id, "kind": self.synthesis.kind}
        return obj


def encode_interface_state(state: InterfaceStatePayload) -> bytes:
    return canonical_json_bytes(state.to_json_obj())


def decode_interface_state(payload: bytes) -> InterfaceStatePayload:
    obj = decode_json_object(payload, "interface state")
    palm = obj.get("palm_open_up", False)
    if not isinstance(palm, bool):
        raise SchemaViolation("interface state: palm_open_up must be a boolean")
    pose = None
    if obj.get("panel_pose") is not None:
        raw = obj["panel_pose"]
        if not (isinstance(raw, list) and len(raw) == 16 and all(isinstance(v, (int, float)) for v in raw)):
            raise SchemaViolation("interface state: panel_pose must be 16 numbers")
        pose = tuple(float(v) for v in raw)
    synthesis = None
    if obj.get("synthesis") is not None:
        raw = obj["synthesis"]
        if (
            not isinstance(raw, dict)
            or not isinstance(raw.get("utterance_id"), int)
            or raw.get("kind") not in ("started", "finished")
        ):
            raise SchemaViolation("interface state: bad synthesis event")
        synthesis = SynthesisEvent(raw["utterance_id"], raw["kind"])
    return InterfaceStatePayload(palm, pose, synthesis)


# -- dispatch -----------------------------------------------------------------------

Payload = Union[
    CameraFramePayload,
    GazePayload,
    PosePayload,
    HandsPayload,
    AudioPayload,
    TextInputPayload,
    InterfaceStatePayload,
    dict,
]


def decode_payload(kind: StreamKind, payload: bytes) -> Payload:
    """Decode payload bytes for a stream kind. JSON-bodied derived kinds return dicts;
    their object schemas are owned by the layers that emit them."""
    if kind in (StreamKind.RGB_CAMERA, StreamKind.PREVIEW_CAMERA, StreamKind.DEPTH_CAMERA):
        return decode_camera_frame(payload, kind)
    if kind is StreamKind.EYE_GAZE:
        return decode_gaze(payload)
    if kind is StreamKind.HEAD_POSE:
        return decode_pose(payload)
    if kind is StreamKind.HANDS:
        return decode_hands(payload)
    if kind is StreamKind.AUDIO:
        return decode_audio(payload)
    if kind is StreamKind.TEXT_INPUT:
        return decode_text_input(payload)
    if kind is StreamKind.INTERFACE_STATE:
        return decode_interface_state(payload)
    return decode_json_object(payload, kind.value)


def encode_payload(value: Payload) -> bytes:
    if isinstance(value, CameraFramePayload):
        return encode_camera_frame(value)
    if isinstance(value, GazePayload):
        return encode_gaze(value)
    if isinstance(value, PosePayload):
        return encode_pose(value)
    if isinstance(value, HandsPayload):
        return encode_hands(value)
    if isinstance(value, AudioPayload):
        return encode_audio(value)
    if isinstance(value, TextInputPayload):
        return encode_text_input(value)
    if isinstance(value, InterfaceStatePayload):
        return encode_interface_state(value)
    if isinstance(value, dict):
        return canonical_json_bytes(value)
    raise TypeError(f"cannot encode payload of type {type(value).__name__}")
