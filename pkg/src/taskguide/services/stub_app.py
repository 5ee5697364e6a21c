"""Scripted stand-ins for the three assist services, as one FastAPI app.

These let the HTTP client paths run end-to-end without model weights:
completions come from a fixture map, detections are rendered from a sphere
scene, and transcription echoes typed text as cumulative partials plus a
final. An optional per-request delay simulates slow backends for timeout and
drop-if-busy testing.
"""

from __future__ import annotations

import time

import numpy as np
from fastapi import FastAPI
from pydantic import BaseModel, Field

from ..geometry import CameraModel, Pose, mask_to_rle
from ..scene import SphereScene, render_label_masks
from .prompts import fixture_key
from .llm import MOCK_UNKNOWN_TEXT


class CompleteRequest(BaseModel):
    correlation_id: str
    template_id: str
    bindings: dict[str, str]
    rendered: str


class CompleteResponse(BaseModel):
    text: str


class CameraParams(BaseModel):
    width: int = Field(gt=0)
    height: int = Field(gt=0)
    fx: float = Field(gt=0)
    fy: float = Field(gt=0)
    cx: float
    cy: float
    pose: list[float] = Field(min_length=16, max_length=16)


class DetectRequest(BaseModel):
    correlation_id: str
    frame_time_ns: int
    vocabulary: list[str]
    camera: CameraParams


class RleMask(BaseModel):
    width: int
    height: int
    runs: list[int]


class MaskOut(BaseModel):
    label: str
    confidence: float
    rle: RleMask


class DetectResponse(BaseModel):
    masks: list[MaskOut]


class TranscribeRequest(BaseModel):
    text: str | None = None
    sample_count: int | None = None
    sample_rate_hz: int | None = None


class SpeechEventOut(BaseModel):
    kind: str
    text: str


class TranscribeResponse(BaseModel):
    events: list[SpeechEventOut]


def create_stub_app(
    llm_fixtures: dict[str, str] | None = None,
    scene: SphereScene | None = None,
    delay_s: float = 0.0,
) -> FastAPI:
    app = FastAPI(title="assist service stubs")
    fixtures = llm_fixtures or {}
    the_scene = scene or SphereScene(())

    def maybe_delay() -> None:
        if delay_s > 0:
            time.sleep(delay_s)

    @app.get("/healthz")
    def healthz() -> dict:
        return {"ok": True}

    @app.post("/complete")
    def complete(request: CompleteRequest) -> CompleteResponse:
        maybe_delay()
        text = fixtures.get(fixture_key(request.template_id, request.bindings), MOCK_UNKNOWN_TEXT)
        return CompleteResponse(text=text)

    @app.post("/detect")
    def detect(request: DetectRequest) -> DetectResponse:
        maybe_delay()
        cam = request.camera
        model = CameraModel(cam.width, cam.height, cam.fx, cam.fy, cam.cx, cam.cy)
        pose = Pose(np.array(cam.pose).reshape(4, 4))
        masks = render_label_masks(the_scene, model, pose, sorted(request.vocabulary))
        out = [
            MaskOut(label=label, confidence=1.0, rle=RleMask(**mask_to_rle(mask)))
            for label, mask in sorted(masks.items())
            if mask.any()
        ]
        return DetectResponse(masks=out)

    @app.post("/transcribe")
    def transcribe(request: TranscribeRequest) -> TranscribeResponse:
        maybe_delay()
        if not request.text:
            return TranscribeResponse(events=[])  # audio chunks carry no scripted speech
        words = request.text.split()
        events = [
            SpeechEventOut(kind="partial", text=" ".join(words[: i + 1])) for i in range(len(words) - 1)
        ]
        events.append(SpeechEventOut(kind="final", text=request.text))
        return TranscribeResponse(events=events)

    return app
