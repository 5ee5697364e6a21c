"""Task recipes: gather / simple / complex steps and cursor arithmetic.

A cursor rests on (step,) for gather and simple steps and on (step, substep)
for complex steps; every substep is its own resting position. Stepping past
the last position completes the task; stepping back from the first stays put.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Union


class HologramKind(str, Enum):
    LABEL = "label"
    STRAIGHT_ARROW = "straight_arrow"
    CURVED_ARROW = "curved_arrow"
    MODEL = "model"


@dataclass(frozen=True)
class Hologram:
    kind: HologramKind
    pose: tuple[float, ...]  # row-major 4x4, task-station (world) frame
    text: str | None = None  # required for LABEL
    model_name: str | None = None  # required for MODEL

    def __post_init__(self) -> None:
        if len(self.pose) != 16:
            raise ValueError("hologram pose must be 16 numbers")
        if self.kind is HologramKind.LABEL and not self.text:
            raise ValueError("label hologram needs text")
        if self.kind is HologramKind.MODEL and not self.model_name:
            raise ValueError("model hologram needs model_name")


@dataclass(frozen=True)
class GatherStep:
    instruction: str
    objects: tuple[str, ...]  # lowercase labels, unique, nonempty


@dataclass(frozen=True)
class SimpleStep:
    instruction: str
    expected_duration_s: float | None = None
    holograms: tuple[Hologram, ...] = ()


@dataclass(frozen=True)
class SubStep:
    instruction: str
    expected_duration_s: float | None = None
    holograms: tuple[Hologram, ...] = ()


@dataclass(frozen=True)
class ComplexStep:
    instruction: str
    substeps: tuple[SubStep, ...]


Step = Union[GatherStep, SimpleStep, ComplexStep]


@dataclass(frozen=True)
class TaskRecipe:
    name: str
    steps: tuple[Step, ...]


@dataclass(frozen=True)
class TaskLibrary:
    tasks: tuple[TaskRecipe, ...]

    def names(self) -> list[str]:
        return [t.name for t in self.tasks]

    def get(self, name: str) -> TaskRecipe | None:
        for t in self.tasks:
            if t.name == name:
                return t
        return None


@dataclass(frozen=True, order=True)
class Cursor:
    step: int
    substep: int | None = None

    def to_json_obj(self) -> list:
        return [self.step, self.substep]


def positions(recipe: TaskRecipe) -> list[Cursor]:
    """Every resting position in execution order."""
    out: list[Cursor] = []
    for i, step in enumerate(recipe.steps):
        if isinstance(step, ComplexStep):
            out.extend(Cursor(i, s) for s in range(len(step.substeps)))
        else:
            out.append(Cursor(i, None))
    return out


def first_position(recipe: TaskRecipe) -> Cursor:
    return positions(recipe)[0]


def next_position(recipe: TaskRecipe, cursor: Cursor) -> Cursor | None:
    """The following resting position, or None when the task is complete."""
    ordered = positions(recipe)
    idx = ordered.index(cursor)
    return ordered[idx + 1] if idx + 1 < len(ordered) else None


def prev_position(recipe: TaskRecipe, cursor: Cursor) -> Cursor:
    """The preceding resting position; the first position backs onto itself."""
    ordered = positions(recipe)
    idx = ordered.index(cursor)
    return ordered[max(idx - 1, 0)]


def step_at(recipe: TaskRecipe, cursor: Cursor) -> Step:
    return recipe.steps[cursor.step]


def instruction_at(recipe: TaskRecipe, cursor: Cursor) -> str:
    """The instruction spoken when the cursor rests here."""
    step = recipe.steps[cursor.step]
    if isinstance(step, ComplexStep):
        assert cursor.substep is not None
        return step.substeps[cursor.substep].instruction
    return step.instruction


def duration_at(recipe: TaskRecipe, cursor: Cursor) -> float | None:
    step = recipe.steps[cursor.step]
    if isinstance(step, ComplexStep):
        assert cursor.substep is not None
        return step.substeps[cursor.substep].expected_duration_s
    if isinstance(step, SimpleStep):
        return step.expected_duration_s
    return None


def holograms_at(recipe: TaskRecipe, cursor: Cursor) -> tuple[Hologram, ...]:
    step = recipe.steps[cursor.step]
    if isinstance(step, ComplexStep):
        assert cursor.substep is not None
        return step.substeps[cursor.substep].holograms
    if isinstance(step, SimpleStep):
        return step.holograms
    return ()
