"""Events the dialog controller consumes.

The pipeline translates decoded envelopes and service completions into these
plain records. Every event carries the pipeline time at which it fired, so the
controller never reads a wall clock.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class SessionStarted:
    """First event of a session; triggers the greeting."""


@dataclass(frozen=True)
class FinalUtterance:
    """A complete user utterance (typed text or a final speech result)."""

    text: str


@dataclass(frozen=True)
class ObjectSpotted:
    """A tracker produced a new object (fires once per track)."""

    track_id: int
    label: str
    position: tuple[float, float, float]


@dataclass(frozen=True)
class LlmResult:
    """A language-model completion arrived (or failed)."""

    correlation_id: str
    text: str
    ok: bool = True
    error: str | None = None


@dataclass(frozen=True)
class SynthesisFinished:
    """The client finished speaking one of our Speak commands."""

    utterance_id: int


@dataclass(frozen=True)
class InterfaceUpdate:
    """Client interface state changed (palm flag and/or panel pose)."""

    palm_open_up: bool
    panel_pose: tuple[float, ...] | None = None


ControllerEvent = (
    SessionStarted
    | FinalUtterance
    | ObjectSpotted
    | LlmResult
    | SynthesisFinished
    | InterfaceUpdate
)
