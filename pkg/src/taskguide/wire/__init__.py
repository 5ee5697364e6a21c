from .envelope import (
    FRAME_OVERHEAD,
    HEADER_SIZE,
    MAGIC,
    MAX_PAYLOAD_LEN,
    VERSION,
    FrameDecoder,
    SensorEnvelope,
    decode_envelope,
    encode_envelope,
)
from .errors import (
    BadMagic,
    CrcMismatch,
    FrameTooLarge,
    NonMonotonicTime,
    SchemaViolation,
    Truncated,
    UnsupportedVersion,
    WireError,
)
from .manifest import (
    MANIFEST_STREAM_ID,
    MAX_CLIENT_STREAM_ID,
    StreamDescriptor,
    StreamManifest,
    decode_manifest_envelope,
    encode_manifest_envelope,
    manifest_from_json_obj,
    new_session_id,
    validate_client_manifest,
)
from .payloads import (
    CLIENT_KINDS,
    DERIVED_KINDS,
    HAND_JOINT_COUNT,
    HAND_JOINT_NAMES,
    AudioPayload,
    CameraFramePayload,
    GazePayload,
    HandsPayload,
    InterfaceStatePayload,
    Payload,
    PixelEncoding,
    PosePayload,
    StreamKind,
    SynthesisEvent,
    TextInputPayload,
    canonical_json_bytes,
    check_pose_matrix,
    decode_payload,
    depth16_size,
    encode_payload,
    nv12_size,
)

__all__ = [name for name in dir() if not name.startswith("_")]
