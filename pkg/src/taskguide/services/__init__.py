from .detector import (
    DetectionMask,
    DetectionRequest,
    DetectionResult,
    DetectorGate,
    GateStats,
    HttpDetector,
    MockDetector,
)
from .llm import (
    DEFAULT_TIMEOUT_S,
    MOCK_UNKNOWN_TEXT,
    FixtureError,
    HttpLlm,
    LlmCompletion,
    LlmQuery,
    MockLlm,
    load_llm_fixtures,
)
from .prompts import (
    PLACEHOLDER_RE,
    PromptError,
    PromptLibrary,
    PromptTemplate,
    bindings_hash,
    fixture_key,
    load_prompt_library,
    prompt_library_from_json_obj,
    render_prompt,
)
from .speech import (
    FINAL,
    PARTIAL,
    HttpTranscriber,
    MockTranscriber,
    SpeechEvent,
    UtteranceSegmenter,
)
from .stub_app import create_stub_app

__all__ = [name for name in dir() if not name.startswith("_")]
