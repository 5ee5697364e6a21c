"""Deterministic dialog controller.

The controller is a pure transition function over an explicit state record:

    advance(state, event, now_ns) -> Transition(state', commands, llm_requests)

No wall clock, no RNG, no I/O. The pipeline feeds it events in envelope-time
order and the same event sequence always yields the same command sequence,
which is what makes recorded sessions replayable bit-for-bit.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field, replace

from ..tasks.model import (
    ComplexStep,
    Cursor,
    GatherStep,
    HologramKind,
    SimpleStep,
    TaskLibrary,
    TaskRecipe,
    duration_at,
    first_position,
    holograms_at,
    instruction_at,
    next_position,
    prev_position,
)
from ..tasks.io import RecipeParseError, normalize_label, validate_generated_recipe
from .commands import (
    ASSISTANT,
    USER,
    AddChatBubble,
    ClearSuggestions,
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

MODE_LIBRARY = "library"
MODE_GENERATED = "generated"

COMPLETION_PHRASES = frozenset({"done", "next", "next step", "finished", "ok done"})
BACK_PHRASES = frozenset({"go back", "previous step"})
TIMER_PHRASES = frozenset({"start the timer", "start timer"})
COME_HERE_PHRASES = frozenset({"come here"})
START_OVER_PHRASES = frozenset({"start over", "new task"})

GREETING_TEXT = "Hi! What would you like to do today?"
UNKNOWN_TASK_TEXT = "Sorry, I don't know that task yet. Pick one I can help with."
LLM_TROUBLE_TEXT = "Sorry, I'm having trouble thinking right now. Please try again."
RECIPE_FAILED_TEXT = "Sorry, I couldn't put together steps for that. Try something else."
TASK_COMPLETE_TEXT = "That was the last step. Nice work!"
ALREADY_DONE_TEXT = "We're all done. Say start over to pick another task."
NO_TIMER_TEXT = "This step has no timer."
PALM_HINT_TEXT = "Hold out your palm face up and say come here to bring the panel over."
PANEL_ACK_TEXT = "Here you go."

_NUMBERED = re.compile(r"^\s*\d+[.)]\s+(.*\S)\s*$")
_QUESTION_FLAG = re.compile(r"QUESTION:\s*(yes|no)\b", re.IGNORECASE)
_ANSWER_LINE = re.compile(r"ANSWER:\s*(.+?)\s*$", re.IGNORECASE | re.MULTILINE)


class Phase(enum.Enum):
    GREETING = "greeting"
    TASK_SELECTION = "task_selection"
    AWAIT_INTENT = "await_intent"
    AWAIT_QUESTIONS = "await_questions"
    CONTEXT_QUESTIONS = "context_questions"
    AWAIT_RECIPE = "await_recipe"
    EXECUTING = "executing"
    AWAIT_ANSWER = "await_answer"
    TASK_COMPLETE = "task_complete"


@dataclass(frozen=True)
class LlmRequest:
    """Ask the pipeline to render this template and submit it."""

    correlation_id: str
    template_id: str
    bindings: dict[str, str]


@dataclass(frozen=True)
class ActiveTimer:
    timer_id: str
    deadline_ns: int
    label: str


@dataclass
class ControllerState:
    library: TaskLibrary
    mode: str = MODE_LIBRARY
    phase: Phase = Phase.GREETING
    task: TaskRecipe | None = None
    cursor: Cursor | None = None
    task_request: str = ""
    questions: list[str] = field(default_factory=list)
    answers: list[str] = field(default_factory=list)
    found_objects: set[str] = field(default_factory=set)
    declared_objects: set[str] = field(default_factory=set)
    dialog: list[tuple[str, str]] = field(default_factory=list)
    placed_holograms: list[str] = field(default_factory=list)
    active_timers: list[ActiveTimer] = field(default_factory=list)
    palm_open_up: bool = False
    suggestions_shown: bool = False
    pending_correlation: str | None = None
    next_utterance_id: int = 1
    next_correlation: int = 1
    next_timer: int = 1
    last_finished_utterance: int = 0
    now_ns: int = 0

    def copy(self) -> "ControllerState":
        return replace(
            self,
            questions=list(self.questions),
            answers=list(self.answers),
            found_objects=set(self.found_objects),
            declared_objects=set(self.declared_objects),
            dialog=list(self.dialog),
            placed_holograms=list(self.placed_holograms),
            active_timers=list(self.active_timers),
        )


@dataclass(frozen=True)
class Transition:
    state: ControllerState
    commands: tuple[InterfaceCommand, ...]
    llm_requests: tuple[LlmRequest, ...]


def normalize_utterance(text: str) -> str:
    lowered = text.lower()
    stripped = re.sub(r"[^a-z0-9\s]", " ", lowered)
    return re.sub(r"\s+", " ", stripped).strip()


def _parse_numbered_lines(text: str) -> list[str]:
    items: list[str] = []
    for line in text.splitlines():
        match = _NUMBERED.match(line)
        if match:
            items.append(match.group(1))
    return items


def _gathered(state: ControllerState) -> set[str]:
    return state.found_objects | state.declared_objects


def detection_vocabulary(state: ControllerState) -> tuple[str, ...]:
    """Labels the perception side should currently look for.

    Detection runs only while the user is on a gather step; the vocabulary is
    the step's still-missing objects.
    """
    if state.phase not in (Phase.EXECUTING, Phase.AWAIT_ANSWER):
        return ()
    if state.task is None or state.cursor is None:
        return ()
    step = state.task.steps[state.cursor.step]
    if not isinstance(step, GatherStep):
        return ()
    missing = set(step.objects) - _gathered(state)
    return tuple(sorted(missing))


# -- command emission helpers (each keeps state invariants in sync) ----------


def _bubble(state: ControllerState, commands: list, side: str, text: str) -> None:
    state.dialog.append((side, text))
    commands.append(AddChatBubble(side, text))


def _say(state: ControllerState, commands: list, text: str) -> None:
    _bubble(state, commands, ASSISTANT, text)
    commands.append(Speak(state.next_utterance_id, text))
    state.next_utterance_id += 1


def _suggest(state: ControllerState, commands: list, items: tuple[str, ...]) -> None:
    if items:
        commands.append(ShowSuggestions(items))
        state.suggestions_shown = True


def _clear_suggestions(state: ControllerState, commands: list) -> None:
    if state.suggestions_shown:
        commands.append(ClearSuggestions())
        state.suggestions_shown = False


def _new_correlation(state: ControllerState) -> str:
    cid = f"llm-{state.next_correlation}"
    state.next_correlation += 1
    state.pending_correlation = cid
    return cid


def _panel_steps(task: TaskRecipe) -> tuple[PanelStep, ...]:
    steps = []
    for step in task.steps:
        if isinstance(step, GatherStep):
            steps.append(PanelStep("gather", step.instruction, (), step.objects))
        elif isinstance(step, SimpleStep):
            steps.append(PanelStep("simple", step.instruction, (), ()))
        elif isinstance(step, ComplexStep):
            steps.append(
                PanelStep("complex", step.instruction, tuple(s.instruction for s in step.substeps), ())
            )
        else:  # pragma: no cover - recipe types are closed
            raise TypeError(type(step).__name__)
    return tuple(steps)


def _panel(state: ControllerState) -> SetTaskPanel:
    assert state.task is not None
    cursor = None
    if state.cursor is not None:
        cursor = (state.cursor.step, state.cursor.substep)
    relevant = set()
    for step in state.task.steps:
        if isinstance(step, GatherStep):
            relevant.update(step.objects)
    return SetTaskPanel(
        task_name=state.task.name,
        steps=_panel_steps(state.task),
        cursor=cursor,
        gathered=tuple(sorted(_gathered(state) & relevant)),
    )


def _executing_suggestions(state: ControllerState) -> tuple[str, ...]:
    assert state.task is not None and state.cursor is not None
    if duration_at(state.task, state.cursor) is not None:
        return ("done", "start the timer", "go back")
    return ("done", "go back")


def _remove_holograms(state: ControllerState, commands: list) -> None:
    for hologram_id in state.placed_holograms:
        commands.append(RemoveHologram(hologram_id))
    state.placed_holograms.clear()


def _place_holograms(state: ControllerState, commands: list) -> None:
    assert state.task is not None and state.cursor is not None
    sub = "x" if state.cursor.substep is None else str(state.cursor.substep)
    for k, holo in enumerate(holograms_at(state.task, state.cursor)):
        hologram_id = f"holo-{state.cursor.step}-{sub}-{k}"
        commands.append(
            PlaceHologram(
                hologram_id=hologram_id,
                kind=holo.kind.value,
                pose=holo.pose,
                text=holo.text if holo.kind is HologramKind.LABEL else None,
                model_name=holo.model_name if holo.kind is HologramKind.MODEL else None,
            )
        )
        state.placed_holograms.append(hologram_id)


def _enter_position(state: ControllerState, commands: list, previous: Cursor | None) -> None:
    """Announce the position under state.cursor and refresh panel/holograms."""
    assert state.task is not None and state.cursor is not None
    task, cursor = state.task, state.cursor
    step = task.steps[cursor.step]
    commands.append(_panel(state))
    new_step = previous is None or previous.step != cursor.step
    if isinstance(step, GatherStep):
        missing = [o for o in step.objects if o not in _gathered(state)]
        if missing:
            _say(state, commands, f"{step.instruction} You need: {', '.join(missing)}.")
        else:
            _say(state, commands, f"{step.instruction} You already have everything.")
    elif isinstance(step, ComplexStep):
        if new_step and cursor.substep == 0:
            _say(state, commands, step.instruction)
        assert cursor.substep is not None
        _say(state, commands, step.substeps[cursor.substep].instruction)
    else:
        _say(state, commands, step.instruction)
    _place_holograms(state, commands)
    _suggest(state, commands, _executing_suggestions(state))


def _move_cursor(state: ControllerState, commands: list, target: Cursor | None) -> None:
    """Leave the current position; either enter target or finish the task."""
    assert state.task is not None
    previous = state.cursor
    _remove_holograms(state, commands)
    _clear_suggestions(state, commands)
    if target is None:
        state.cursor = None
        state.phase = Phase.TASK_COMPLETE
        commands.append(_panel(state))
        _say(state, commands, TASK_COMPLETE_TEXT)
        _suggest(state, commands, ("start over",))
        return
    state.cursor = target
    state.phase = Phase.EXECUTING
    _enter_position(state, commands, previous)


def _maybe_finish_gather(state: ControllerState, commands: list) -> None:
    """Auto-advance a gather step once every object is found or declared."""
    if state.phase is not Phase.EXECUTING or state.task is None or state.cursor is None:
        return
    step = state.task.steps[state.cursor.step]
    if not isinstance(step, GatherStep):
        return
    if set(step.objects) <= _gathered(state):
        _say(state, commands, "You have everything you need.")
        _move_cursor(state, commands, next_position(state.task, state.cursor))


def _start_task(state: ControllerState, commands: list, task: TaskRecipe) -> None:
    state.task = task
    state.found_objects.clear()
    state.declared_objects.clear()
    state.cursor = first_position(task)
    state.phase = Phase.EXECUTING
    _say(state, commands, f"Let's get started: {task.name}.")
    _enter_position(state, commands, None)
    _maybe_finish_gather(state, commands)


def _reset_to_selection(state: ControllerState, commands: list, text: str) -> None:
    state.task = None
    state.cursor = None
    state.phase = Phase.TASK_SELECTION
    _say(state, commands, text)
    if state.mode == MODE_LIBRARY:
        _suggest(state, commands, tuple(t.name for t in state.library.tasks[:3]))


# -- per-phase utterance handling --------------------------------------------


def _handle_task_request(state: ControllerState, commands: list, requests: list, text: str) -> None:
    state.task_request = text
    if state.mode == MODE_LIBRARY:
        names = "\n".join(t.name for t in state.library.tasks)
        cid = _new_correlation(state)
        requests.append(
            LlmRequest(cid, "intent_recognition", {"utterance": text, "task_names": names})
        )
        state.phase = Phase.AWAIT_INTENT
    else:
        cid = _new_correlation(state)
        requests.append(LlmRequest(cid, "context_questions", {"task_request": text}))
        state.phase = Phase.AWAIT_QUESTIONS


def _submit_recipe_request(state: ControllerState, requests: list) -> None:
    if state.answers:
        context = "\n".join(f"{i + 1}. {a}" for i, a in enumerate(state.answers))
    else:
        context = "none"
    cid = _new_correlation(state)
    requests.append(
        LlmRequest(
            cid,
            "recipe_generation",
            {"task_request": state.task_request, "context_answers": context},
        )
    )
    state.phase = Phase.AWAIT_RECIPE


def _match_library_task(state: ControllerState, text: str) -> TaskRecipe | None:
    wanted = normalize_label(text)
    for task in state.library.tasks:
        if normalize_label(task.name) == wanted:
            return task
    return None


def _handle_declare(state: ControllerState, commands: list, norm: str) -> bool:
    """Mark step objects the user claims to have. Returns True if any matched."""
    assert state.task is not None and state.cursor is not None
    step = state.task.steps[state.cursor.step]
    assert isinstance(step, GatherStep)
    matched = []
    for label in step.objects:
        if label in _gathered(state):
            continue
        if re.search(rf"\b{re.escape(label)}\b", norm):
            matched.append(label)
    if not matched:
        return False
    state.declared_objects.update(matched)
    _say(state, commands, f"Got it, marked off: {', '.join(matched)}.")
    commands.append(_panel(state))
    _maybe_finish_gather(state, commands)
    return True


def _handle_executing_utterance(
    state: ControllerState, commands: list, requests: list, text: str, norm: str
) -> None:
    assert state.task is not None and state.cursor is not None
    task, cursor = state.task, state.cursor
    if norm in COMPLETION_PHRASES:
        _move_cursor(state, commands, next_position(task, cursor))
        return
    if norm in BACK_PHRASES:
        previous = prev_position(task, cursor)
        if previous == cursor:
            _say(state, commands, "We're already at the first step.")
        else:
            _move_cursor(state, commands, previous)
        return
    if norm in TIMER_PHRASES:
        duration = duration_at(task, cursor)
        if duration is None:
            _say(state, commands, NO_TIMER_TEXT)
            return
        timer_id = f"timer-{state.next_timer}"
        state.next_timer += 1
        deadline = state.now_ns + int(round(duration * 1e9))
        state.active_timers.append(ActiveTimer(timer_id, deadline, instruction_at(task, cursor)))
        commands.append(StartTimer(timer_id, duration))
        _say(state, commands, f"Timer set for {_format_duration(duration)}.")
        return
    step = task.steps[cursor.step]
    if isinstance(step, GatherStep) and ("i have" in norm or "found the" in norm):
        if _handle_declare(state, commands, norm):
            return
    # Anything else is treated as a question about the current step.
    cid = _new_correlation(state)
    requests.append(
        LlmRequest(
            cid,
            "question_answer",
            {
                "task_name": task.name,
                "step_instruction": instruction_at(task, cursor),
                "utterance": text,
            },
        )
    )
    state.phase = Phase.AWAIT_ANSWER


def _format_duration(duration_s: float) -> str:
    total = int(round(duration_s))
    minutes, seconds = divmod(total, 60)
    if minutes and seconds:
        return f"{minutes} min {seconds} s"
    if minutes:
        return f"{minutes} min"
    return f"{seconds} s"


def _handle_utterance(state: ControllerState, commands: list, requests: list, text: str) -> None:
    _bubble(state, commands, USER, text)
    _clear_suggestions(state, commands)
    norm = normalize_utterance(text)
    if not norm:
        return
    if norm in COME_HERE_PHRASES:
        if state.palm_open_up:
            commands.append(MovePanelToUser())
            _say(state, commands, PANEL_ACK_TEXT)
        else:
            _say(state, commands, PALM_HINT_TEXT)
        return
    phase = state.phase
    if phase in (Phase.GREETING, Phase.TASK_SELECTION):
        _handle_task_request(state, commands, requests, text)
    elif phase is Phase.CONTEXT_QUESTIONS:
        state.answers.append(text)
        index = len(state.answers)
        if index < len(state.questions):
            _say(state, commands, state.questions[index])
        else:
            _submit_recipe_request(state, requests)
    elif phase is Phase.EXECUTING:
        _handle_executing_utterance(state, commands, requests, text, norm)
    elif phase is Phase.TASK_COMPLETE:
        if norm in START_OVER_PHRASES:
            _reset_to_selection(state, commands, GREETING_TEXT)
        else:
            _say(state, commands, ALREADY_DONE_TEXT)
    # AWAIT_* phases: the utterance is recorded as a bubble and nothing else;
    # the user spoke while we were waiting on a service.


# -- LLM completions ----------------------------------------------------------


def _handle_llm(state: ControllerState, commands: list, requests: list, event: LlmResult) -> None:
    if event.correlation_id != state.pending_correlation:
        return  # stale completion from an abandoned exchange
    state.pending_correlation = None
    phase = state.phase
    if phase is Phase.AWAIT_INTENT:
        if not event.ok:
            _reset_to_selection(state, commands, LLM_TROUBLE_TEXT)
            return
        task = _match_library_task(state, event.text.strip())
        if task is None:
            _reset_to_selection(state, commands, UNKNOWN_TASK_TEXT)
        else:
            _start_task(state, commands, task)
    elif phase is Phase.AWAIT_QUESTIONS:
        if not event.ok:
            _reset_to_selection(state, commands, LLM_TROUBLE_TEXT)
            return
        questions = _parse_numbered_lines(event.text)
        state.questions = questions
        state.answers = []
        if questions:
            state.phase = Phase.CONTEXT_QUESTIONS
            _say(state, commands, questions[0])
        else:
            _submit_recipe_request(state, requests)
    elif phase is Phase.AWAIT_RECIPE:
        if not event.ok:
            _reset_to_selection(state, commands, LLM_TROUBLE_TEXT)
            return
        try:
            task = validate_generated_recipe(event.text, name=state.task_request)
        except RecipeParseError:
            _reset_to_selection(state, commands, RECIPE_FAILED_TEXT)
            return
        _start_task(state, commands, task)
    elif phase is Phase.AWAIT_ANSWER:
        state.phase = Phase.EXECUTING
        if event.ok:
            flag = _QUESTION_FLAG.search(event.text)
            answer = _ANSWER_LINE.search(event.text)
            if flag and flag.group(1).lower() == "yes" and answer:
                reply = answer.group(1).strip()
                if reply and reply.upper() != "NONE":
                    _say(state, commands, reply)
        _maybe_finish_gather(state, commands)


# -- object sightings ---------------------------------------------------------


def _handle_spotted(state: ControllerState, commands: list, event: ObjectSpotted) -> None:
    commands.append(ShowObjectLabel(event.track_id, event.label, event.position))
    if state.task is None or state.cursor is None:
        return
    step = state.task.steps[state.cursor.step]
    if not isinstance(step, GatherStep):
        return
    if event.label not in step.objects or event.label in _gathered(state):
        return
    state.found_objects.add(event.label)
    _say(state, commands, f"I can see the {event.label}.")
    commands.append(_panel(state))
    _maybe_finish_gather(state, commands)


# -- entry points --------------------------------------------------------------


def initial_state(library: TaskLibrary, mode: str = MODE_LIBRARY) -> ControllerState:
    if mode not in (MODE_LIBRARY, MODE_GENERATED):
        raise ValueError(f"unknown mode {mode!r}")
    return ControllerState(library=library, mode=mode)


def advance(state: ControllerState, event: ControllerEvent, now_ns: int) -> Transition:
    new = state.copy()
    new.now_ns = now_ns
    commands: list[InterfaceCommand] = []
    requests: list[LlmRequest] = []
    if isinstance(event, SessionStarted):
        if new.phase is Phase.GREETING:
            new.phase = Phase.TASK_SELECTION
            _say(new, commands, GREETING_TEXT)
            if new.mode == MODE_LIBRARY:
                _suggest(new, commands, tuple(t.name for t in new.library.tasks[:3]))
    elif isinstance(event, FinalUtterance):
        _handle_utterance(new, commands, requests, event.text)
    elif isinstance(event, LlmResult):
        _handle_llm(new, commands, requests, event)
    elif isinstance(event, ObjectSpotted):
        _handle_spotted(new, commands, event)
    elif isinstance(event, SynthesisFinished):
        new.last_finished_utterance = max(new.last_finished_utterance, event.utterance_id)
    elif isinstance(event, InterfaceUpdate):
        new.palm_open_up = event.palm_open_up
    else:  # pragma: no cover - event union is closed
        raise TypeError(f"unknown event {type(event).__name__}")
    return Transition(new, tuple(commands), tuple(requests))


def timer_tick(state: ControllerState, now_ns: int) -> Transition:
    """Expire due timers. Returns an identity transition when nothing is due."""
    due = [t for t in state.active_timers if t.deadline_ns <= now_ns]
    if not due:
        return Transition(state, (), ())
    new = state.copy()
    new.now_ns = now_ns
    commands: list[InterfaceCommand] = []
    new.active_timers = [t for t in new.active_timers if t.deadline_ns > now_ns]
    for timer in due:
        commands.append(StopTimer(timer.timer_id))
        _say(new, commands, f"Time's up: {timer.label}")
    return Transition(new, tuple(commands), ())
