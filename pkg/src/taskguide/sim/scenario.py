"""Scripted session scenarios.

A scenario is a JSON document: a sphere scene, a camera trajectory given as
look-at keyframes, and timed operator events (utterances, palm gestures).
Poses between keyframes interpolate position and look-at target linearly and
rebuild the orientation with look_at, so every interpolated pose is exactly
orthonormal.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from ..geometry import Pose
from ..scene import SphereScene


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class Keyframe:
    at_s: float
    position: tuple[float, float, float]
    look_at: tuple[float, float, float]


@dataclass(frozen=True)
class ScriptEvent:
    at_s: float
    say: str | None = None
    palm_open: bool | None = None


@dataclass(frozen=True)
class Scenario:
    name: str
    duration_s: float
    scene: SphereScene
    keyframes: tuple[Keyframe, ...]
    events: tuple[ScriptEvent, ...]


def _vec3(obj, where: str) -> tuple[float, float, float]:
    if not isinstance(obj, list) or len(obj) != 3:
        raise ScenarioError(f"{where}: expected [x, y, z]")
    try:
        return tuple(float(v) for v in obj)
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"{where}: {exc}") from exc


def scenario_from_json_obj(obj: dict, name: str = "scenario") -> Scenario:
    if not isinstance(obj, dict):
        raise ScenarioError("scenario must be a JSON object")
    if obj.get("schema") != 1:
        raise ScenarioError(f"unsupported scenario schema {obj.get('schema')!r}")
    try:
        duration_s = float(obj["duration_s"])
        scene = SphereScene.from_json_obj(obj["scene"])
        raw_frames = obj["camera"]["keyframes"]
        raw_events = obj.get("events", [])
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioError(f"malformed scenario: {exc!r}") from exc
    if duration_s <= 0:
        raise ScenarioError("duration_s must be positive")
    if not isinstance(raw_frames, list) or not raw_frames:
        raise ScenarioError("/camera/keyframes: need at least one keyframe")
    keyframes = []
    for i, kf in enumerate(raw_frames):
        where = f"/camera/keyframes/{i}"
        if not isinstance(kf, dict):
            raise ScenarioError(f"{where}: expected an object")
        at_s = float(kf.get("at_s", -1))
        if at_s < 0:
            raise ScenarioError(f"{where}: at_s must be >= 0")
        if keyframes and at_s <= keyframes[-1].at_s:
            raise ScenarioError(f"{where}: keyframes must be in increasing time order")
        keyframes.append(Keyframe(at_s, _vec3(kf.get("position"), where + "/position"),
                                  _vec3(kf.get("look_at"), where + "/look_at")))
    events = []
    for i, ev in enumerate(raw_events):
        where = f"/events/{i}"
        if not isinstance(ev, dict):
            raise ScenarioError(f"{where}: expected an object")
        at_s = float(ev.get("at_s", -1))
        if at_s < 0 or at_s > duration_s:
            raise ScenarioError(f"{where}: at_s must be within [0, duration_s]")
        if events and at_s < events[-1].at_s:
            raise ScenarioError(f"{where}: events must be in time order")
        say = ev.get("say")
        palm = ev.get("palm_open")
        if say is None and palm is None:
            raise ScenarioError(f"{where}: needs say or palm_open")
        if say is not None and (not isinstance(say, str) or not say.strip()):
            raise ScenarioError(f"{where}: say must be a non-empty string")
        if palm is not None and not isinstance(palm, bool):
            raise ScenarioError(f"{where}: palm_open must be a boolean")
        events.append(ScriptEvent(at_s, say, palm))
    return Scenario(name, duration_s, scene, tuple(keyframes), tuple(events))


def load_scenario(path: Path) -> Scenario:
    path = Path(path)
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise ScenarioError(f"cannot read scenario {path}: {exc}") from exc
    return scenario_from_json_obj(obj, name=path.stem)


def load_bundled_scenario(name: str) -> Scenario:
    ref = resources.files("taskguide.sim").joinpath(f"data/{name}.json")
    with resources.as_file(ref) as path:
        return load_scenario(path)


def camera_pose_at(scenario: Scenario, t_s: float) -> Pose:
    frames = scenario.keyframes
    if t_s <= frames[0].at_s or len(frames) == 1:
        kf = frames[0]
        return Pose.look_at(kf.position, kf.look_at)
    if t_s >= frames[-1].at_s:
        kf = frames[-1]
        return Pose.look_at(kf.position, kf.look_at)
    for a, b in zip(frames, frames[1:]):
        if a.at_s <= t_s <= b.at_s:
            w = (t_s - a.at_s) / (b.at_s - a.at_s)
            position = (1 - w) * np.asarray(a.position) + w * np.asarray(b.position)
            target = (1 - w) * np.asarray(a.look_at) + w * np.asarray(b.look_at)
            return Pose.look_at(tuple(position), tuple(target))
    raise AssertionError("unreachable: keyframes are ordered")
