"""Task library persistence and generated-recipe parsing.

Library files are JSON with a top-level {"schema": 1, "tasks": [...]}.
Validation errors carry a JSON-pointer-style path to the offending node.
"""

from __future__ import annotations

import json
import re
from importlib import resources
from pathlib import Path

from .model import (
    ComplexStep,
    GatherStep,
    Hologram,
    HologramKind,
    SimpleStep,
    Step,
    SubStep,
    TaskLibrary,
    TaskRecipe,
)

SCHEMA_VERSION = 1


class SchemaError(ValueError):
    def __init__(self, path: str, message: str) -> None:
        super().__init__(f"{path}: {message}")
        self.path = path


class RecipeParseError(ValueError):
    pass


def _require(obj: dict, key: str, kind, path: str):
    if key not in obj:
        raise SchemaError(path, f"missing required key {key!r}")
    value = obj[key]
    if not isinstance(value, kind):
        raise SchemaError(f"{path}/{key}", f"expected {getattr(kind, '__name__', kind)}, got {type(value).__name__}")
    return value


def _optional_duration(obj: dict, path: str) -> float | None:
    value = obj.get("expected_duration_s")
    if value is None:
        return None
    if not isinstance(value, (int, float)) or isinstance(value, bool) or value <= 0:
        raise SchemaError(f"{path}/expected_duration_s", "must be a positive number or null")
    return float(value)


def _parse_holograms(obj: dict, path: str) -> tuple[Hologram, ...]:
    raw = obj.get("holograms", [])
    if not isinstance(raw, list):
        raise SchemaError(f"{path}/holograms", "must be a list")
    out = []
    for k, h in enumerate(raw):
        hpath = f"{path}/holograms/{k}"
        if not isinstance(h, dict):
            raise SchemaError(hpath, "must be an object")
        kind_raw = _require(h, "kind", str, hpath)
        try:
            kind = HologramKind(kind_raw)
        except ValueError:
            raise SchemaError(f"{hpath}/kind", f"unknown hologram kind {kind_raw!r}") from None
        pose = _require(h, "pose", list, hpath)
        if len(pose) != 16 or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in pose):
            raise SchemaError(f"{hpath}/pose", "must be 16 numbers (row-major 4x4)")
        try:
            out.append(
                Hologram(
                    kind=kind,
                    pose=tuple(float(v) for v in pose),
                    text=h.get("text"),
                    model_name=h.get("model_name"),
                )
            )
        except ValueError as exc:
            raise SchemaError(hpath, str(exc)) from None
    return tuple(out)


def normalize_label(label: str) -> str:
    return " ".join(label.lower().split())


def _parse_step(raw: dict, path: str) -> Step:
    if not isinstance(raw, dict):
        raise SchemaError(path, "step must be an object")
    step_type = _require(raw, "type", str, path)
    instruction = _require(raw, "instruction", str, path)
    if not instruction.strip():
        raise SchemaError(f"{path}/instruction", "must be nonempty")
    if step_type == "gather":
        objects_raw = _require(raw, "objects", list, path)
        if not objects_raw:
            raise SchemaError(f"{path}/objects", "must be nonempty")
        objects = []
        for k, label in enumerate(objects_raw):
            if not isinstance(label, str) or not label.strip():
                raise SchemaError(f"{path}/objects/{k}", "must be a nonempty string")
            objects.append(normalize_label(label))
        if len(set(objects)) != len(objects):
            raise SchemaError(f"{path}/objects", "duplicate labels")
        return GatherStep(instruction, tuple(objects))
    if step_type == "simple":
        return SimpleStep(instruction, _optional_duration(raw, path), _parse_holograms(raw, path))
    if step_type == "complex":
        substeps_raw = _require(raw, "substeps", list, path)
        if not substeps_raw:
            raise SchemaError(f"{path}/substeps", "must be nonempty")
        substeps = []
        for k, sub in enumerate(substeps_raw):
            spath = f"{path}/substeps/{k}"
            if not isinstance(sub, dict):
                raise SchemaError(spath, "substep must be an object")
            sub_instruction = _require(sub, "instruction", str, spath)
            if not sub_instruction.strip():
                raise SchemaError(f"{spath}/instruction", "must be nonempty")
            substeps.append(SubStep(sub_instruction, _optional_duration(sub, spath), _parse_holograms(sub, spath)))
        return ComplexStep(instruction, tuple(substeps))
    raise SchemaError(f"{path}/type", f"unknown step type {step_type!r}")


def library_from_json_obj(obj: dict) -> TaskLibrary:
    if not isinstance(obj, dict):
        raise SchemaError("/", "library must be a JSON object")
    schema = _require(obj, "schema", int, "/")
    if schema != SCHEMA_VERSION:
        raise SchemaError("/schema", f"unsupported schema {schema}")
    tasks_raw = _require(obj, "tasks", list, "/")
    tasks = []
    names = set()
    for i, task in enumerate(tasks_raw):
        path = f"/tasks/{i}"
        if not isinstance(task, dict):
            raise SchemaError(path, "task must be an object")
        name = _require(task, "name", str, path).strip()
        if not name:
            raise SchemaError(f"{path}/name", "must be nonempty")
        if name in names:
            raise SchemaError(f"{path}/name", f"duplicate task name {name!r}")
        names.add(name)
        steps_raw = _require(task, "steps", list, path)
        if not steps_raw:
            raise SchemaError(f"{path}/steps", "must be nonempty")
        steps = tuple(_parse_step(s, f"{path}/steps/{j}") for j, s in enumerate(steps_raw))
        tasks.append(TaskRecipe(name, steps))
    return TaskLibrary(tuple(tasks))


def load_library(path: Path) -> TaskLibrary:
    try:
        obj = json.loads(Path(path).read_text("utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise SchemaError("/", f"cannot read library: {exc}") from exc
    return library_from_json_obj(obj)


def load_bundled_library() -> TaskLibrary:
    text = resources.files("taskguide.tasks").joinpath("data/tasks.json").read_text("utf-8")
    return library_from_json_obj(json.loads(text))


def _hologram_to_json(h: Hologram) -> dict:
    return {"kind": h.kind.value, "pose": list(h.pose), "text": h.text, "model_name": h.model_name}


def _step_to_json(step: Step) -> dict:
    if isinstance(step, GatherStep):
        return {"type": "gather", "instruction": step.instruction, "objects": list(step.objects)}
    if isinstance(step, SimpleStep):
        return {
            "type": "simple",
            "instruction": step.instruction,
            "expected_duration_s": step.expected_duration_s,
            "holograms": [_hologram_to_json(h) for h in step.holograms],
        }
    return {
        "type": "complex",
        "instruction": step.instruction,
        "substeps": [
            {
                "instruction": sub.instruction,
                "expected_duration_s": sub.expected_duration_s,
                "holograms": [_hologram_to_json(h) for h in sub.holograms],
            }
            for sub in step.substeps
        ],
    }


def library_to_json_obj(library: TaskLibrary) -> dict:
    return {
        "schema": SCHEMA_VERSION,
        "tasks": [{"name": t.name, "steps": [_step_to_json(s) for s in t.steps]} for t in library.tasks],
    }


def save_library(library: TaskLibrary, path: Path) -> None:
    Path(path).write_text(json.dumps(library_to_json_obj(library), indent=2, sort_keys=True) + "\n", "utf-8")


_NUMBERED_LINE = re.compile(r"^\s*(\d+)[.)]\s+(.*\S)\s*$")


def validate_generated_recipe(text: str, name: str) -> TaskRecipe:
    """Parse an LLM-generated numbered step list into a recipe of simple steps.

    Rejects empty or malformed lists: at least one numbered line is required
    and numbering must start at 1 and increase by 1.
    """
    steps = []
    expected = 1
    for line in text.splitlines():
        if not line.strip():
            continue
        match = _NUMBERED_LINE.match(line)
        if match is None:
            continue  # prose around the list is tolerated
        number = int(match.group(1))
        if number != expected:
            raise RecipeParseError(f"step numbering jumps to {number}, expected {expected}")
        expected += 1
        steps.append(SimpleStep(match.group(2)))
    if not steps:
        raise RecipeParseError("no numbered steps found")
    return TaskRecipe(name, tuple(steps))
