from .config import (
    AsrBackendConfig,
    ConfigError,
    DetectorBackendConfig,
    GeometryConfig,
    LlmBackendConfig,
    ServerConfig,
    build_detector,
    build_library,
    build_llm,
    build_transcriber,
    load_config,
    load_scene,
)
from .pipeline import (
    COMMAND_STREAM_ID,
    CONTROLLER_TRACE_STREAM_ID,
    DETECTION_STREAM_ID,
    LLM_TRACE_STREAM_ID,
    UI_STATE_STREAM_ID,
    UI_TEXT_STREAM_ID,
    PipelineError,
    PipelineReport,
    SessionPipeline,
    server_stream_descriptors,
)
from .replay import ReplayError, input_stream_ids, run_replay
from .server import SessionServer
from .bridge import create_bridge_app

__all__ = [name for name in dir() if not name.startswith("_")]
