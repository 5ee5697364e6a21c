from .commands import (
    ASSISTANT,
    USER,
    AddChatBubble,
    ClearSuggestions,
    CommandError,
    InterfaceCommand,
    MovePanelToUser,
    PanelStep,
    PlaceHologram,
    RemoveHologram,
    SetTaskPanel,
    ShowObjectLabel,
    ShowSuggestions,
    Speak,
    StartTimer,
    StopTimer,
    command_from_json_obj,
    command_to_json_obj,
)
from .events import (
    ControllerEvent,
    FinalUtterance,
    InterfaceUpdate,
    LlmResult,
    ObjectSpotted,
    SessionStarted,
    SynthesisFinished,
)
from .fsm import (
    BACK_PHRASES,
    COMPLETION_PHRASES,
    MODE_GENERATED,
    MODE_LIBRARY,
    TIMER_PHRASES,
    ActiveTimer,
    ControllerState,
    LlmRequest,
    Phase,
    Transition,
    advance,
    detection_vocabulary,
    initial_state,
    normalize_utterance,
    timer_tick,
)

__all__ = [name for name in dir() if not name.startswith("_")]
