"""Interface commands: everything the server can tell a headset UI to do.

Commands serialize to JSON objects with a "type" discriminator and travel on
the derived command stream in canonical form, so identical command sequences
produce identical bytes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

ASSISTANT = "assistant"
USER = "user"


class CommandError(ValueError):
    pass


@dataclass(frozen=True)
class PanelStep:
    kind: str  # "gather" | "simple" | "complex"
    instruction: str
    substeps: tuple[str, ...] = ()
    objects: tuple[str, ...] = ()


@dataclass(frozen=True)
class SetTaskPanel:
    task_name: str
    steps: tuple[PanelStep, ...]
    cursor: tuple[int, int | None] | None  # None once the task is complete
    gathered: tuple[str, ...] = ()  # labels already found or declared


@dataclass(frozen=True)
class AddChatBubble:
    side: str  # "assistant" | "user"
    text: str


@dataclass(frozen=True)
class ShowSuggestions:
    suggestions: tuple[str, ...]  # at most 3


@dataclass(frozen=True)
class ClearSuggestions:
    pass


@dataclass(frozen=True)
class Speak:
    utterance_id: int
    text: str


@dataclass(frozen=True)
class PlaceHologram:
    hologram_id: str
    kind: str  # HologramKind value
    pose: tuple[float, ...]
    text: str | None = None
    model_name: str | None = None


@dataclass(frozen=True)
class RemoveHologram:
    hologram_id: str


@dataclass(frozen=True)
class ShowObjectLabel:
    track_id: int
    label: str
    position: tuple[float, float, float]


@dataclass(frozen=True)
class StartTimer:
    timer_id: str
    duration_s: float


@dataclass(frozen=True)
class StopTimer:
    timer_id: str


@dataclass(frozen=True)
class MovePanelToUser:
    pass


InterfaceCommand = Union[
    SetTaskPanel,
    AddChatBubble,
    ShowSuggestions,
    ClearSuggestions,
    Speak,
    PlaceHologram,
    RemoveHologram,
    ShowObjectLabel,
    StartTimer,
    StopTimer,
    MovePanelToUser,
]

_TYPE_NAMES: dict[type, str] = {
    SetTaskPanel: "set_task_panel",
    AddChatBubble: "add_chat_bubble",
    ShowSuggestions: "show_suggestions",
    ClearSuggestions: "clear_suggestions",
    Speak: "speak",
    PlaceHologram: "place_hologram",
    RemoveHologram: "remove_hologram",
    ShowObjectLabel: "show_object_label",
    StartTimer: "start_timer",
    StopTimer: "stop_timer",
    MovePanelToUser: "move_panel_to_user",
}
_BY_NAME = {name: cls for cls, name in _TYPE_NAMES.items()}


def command_to_json_obj(cmd: InterfaceCommand) -> dict:
    name = _TYPE_NAMES[type(cmd)]
    if isinstance(cmd, SetTaskPanel):
        return {
            "type": name,
            "task_name": cmd.task_name,
            "steps": [
                {
                    "kind": s.kind,
                    "instruction": s.instruction,
                    "substeps": list(s.substeps),
                    "objects": list(s.objects),
                }
                for s in cmd.steps
            ],
            "cursor": list(cmd.cursor) if cmd.cursor is not None else None,
            "gathered": list(cmd.gathered),
        }
    if isinstance(cmd, AddChatBubble):
        return {"type": name, "side": cmd.side, "text": cmd.text}
    if isinstance(cmd, ShowSuggestions):
        return {"type": name, "suggestions": list(cmd.suggestions)}
    if isinstance(cmd, ClearSuggestions):
        return {"type": name}
    if isinstance(cmd, Speak):
        return {"type": name, "utterance_id": cmd.utterance_id, "text": cmd.text}
    if isinstance(cmd, PlaceHologram):
        return {
            "type": name,
            "hologram_id": cmd.hologram_id,
            "kind": cmd.kind,
            "pose": list(cmd.pose),
            "text": cmd.text,
            "model_name": cmd.model_name,
        }
    if isinstance(cmd, RemoveHologram):
        return {"type": name, "hologram_id": cmd.hologram_id}
    if isinstance(cmd, ShowObjectLabel):
        return {"type": name, "track_id": cmd.track_id, "label": cmd.label, "position": list(cmd.position)}
    if isinstance(cmd, StartTimer):
        return {"type": name, "timer_id": cmd.timer_id, "duration_s": cmd.duration_s}
    if isinstance(cmd, StopTimer):
        return {"type": name, "timer_id": cmd.timer_id}
    if isinstance(cmd, MovePanelToUser):
        return {"type": name}
    raise CommandError(f"unknown command type {type(cmd).__name__}")


def _expect(obj: dict, key: str, kind) -> object:
    if key not in obj:
        raise CommandError(f"missing field {key!r}")
    value = obj[key]
    if not isinstance(value, kind):
        raise CommandError(f"field {key!r}: expected {kind}, got {type(value).__name__}")
    return value


def command_from_json_obj(obj: dict) -> InterfaceCommand:
    if not isinstance(obj, dict):
        raise CommandError("command must be a JSON object")
    name = obj.get("type")
    cls = _BY_NAME.get(name)
    if cls is None:
        raise CommandError(f"unknown command type {name!r}")
    try:
        if cls is SetTaskPanel:
            steps = tuple(
                PanelStep(
                    kind=str(s["kind"]),
                    instruction=str(s["instruction"]),
                    substeps=tuple(str(x) for x in s["substeps"]),
                    objects=tuple(str(x) for x in s["objects"]),
                )
                for s in _expect(obj, "steps", list)
            )
            cursor_raw = obj.get("cursor")
            cursor = None
            if cursor_raw is not None:
                step_idx, sub_idx = cursor_raw
                cursor = (int(step_idx), int(sub_idx) if sub_idx is not None else None)
            return SetTaskPanel(
                task_name=str(_expect(obj, "task_name", str)),
                steps=steps,
                cursor=cursor,
                gathered=tuple(str(x) for x in obj.get("gathered", [])),
            )
        if cls is AddChatBubble:
            side = str(_expect(obj, "side", str))
            if side not in (ASSISTANT, USER):
                raise CommandError(f"bad bubble side {side!r}")
            return AddChatBubble(side, str(_expect(obj, "text", str)))
        if cls is ShowSuggestions:
            suggestions = tuple(str(s) for s in _expect(obj, "suggestions", list))
            if len(suggestions) > 3:
                raise CommandError("at most 3 suggestions")
            return ShowSuggestions(suggestions)
        if cls is ClearSuggestions:
            return ClearSuggestions()
        if cls is Speak:
            return Speak(int(_expect(obj, "utterance_id", int)), str(_expect(obj, "text", str)))
        if cls is PlaceHologram:
            pose = tuple(float(v) for v in _expect(obj, "pose", list))
            if len(pose) != 16:
                raise CommandError("hologram pose must be 16 numbers")
            return PlaceHologram(
                hologram_id=str(_expect(obj, "hologram_id", str)),
                kind=str(_expect(obj, "kind", str)),
                pose=pose,
                text=obj.get("text"),
                model_name=obj.get("model_name"),
            )
        if cls is RemoveHologram:
            return RemoveHologram(str(_expect(obj, "hologram_id", str)))
        if cls is ShowObjectLabel:
            position = _expect(obj, "position", list)
            if len(position) != 3:
                raise CommandError("position must be [x, y, z]")
            return ShowObjectLabel(
                int(_expect(obj, "track_id", int)),
                str(_expect(obj, "label", str)),
                tuple(float(v) for v in position),
            )
        if cls is StartTimer:
            duration = _expect(obj, "duration_s", (int, float))
            if isinstance(duration, bool) or duration <= 0:
                raise CommandError("duration_s must be positive")
            return StartTimer(str(_expect(obj, "timer_id", str)), float(duration))
        if cls is StopTimer:
            return StopTimer(str(_expect(obj, "timer_id", str)))
        if cls is MovePanelToUser:
            return MovePanelToUser()
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, CommandError):
            raise
        raise CommandError(f"{name}: {exc!r}") from exc
    raise CommandError(f"unhandled command type {name!r}")
