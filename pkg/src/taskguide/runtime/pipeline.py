"""The session pipeline: envelopes in, commands and derived streams out.

Single-threaded and clocked purely by envelope originating-times, in live and
replay mode alike. Wall time touches nothing but catalog flush cadence, so
feeding the same input envelopes (with mock services) always produces the
same derived streams. Threading, sockets and pacing live in server.py.
"""

from __future__ import annotations

import dataclasses
import time
from collections import OrderedDict
from pathlib import Path
from typing import Callable

import numpy as np

from ..controller import (
    ControllerEvent,
    FinalUtterance,
    InterfaceUpdate,
    LlmResult,
    ObjectSpotted,
    SessionStarted,
    SynthesisFinished,
    Transition,
    advance,
    command_to_json_obj,
    detection_vocabulary,
    initial_state,
    timer_tick,
)
from ..geometry import (
    CameraModel,
    Detection3d,
    ObjectTracker,
    Pose,
    RgbdPairer,
    backproject_depth,
    centroid_of,
    mask_subcloud,
    rle_to_mask,
)
from ..services import (
    DetectionRequest,
    DetectionResult,
    DetectorGate,
    LlmCompletion,
    LlmQuery,
    UtteranceSegmenter,
    fixture_key,
    load_prompt_library,
    render_prompt,
)
from ..services.speech import FINAL
from ..store import SessionWriter
from ..tasks import TaskLibrary
from ..wire import (
    CLIENT_KINDS,
    MANIFEST_STREAM_ID,
    CameraFramePayload,
    SchemaViolation,
    SensorEnvelope,
    StreamDescriptor,
    StreamKind,
    StreamManifest,
    canonical_json_bytes,
    decode_manifest_envelope,
    decode_payload,
    encode_payload,
    new_session_id,
)
from .config import GeometryConfig

UI_TEXT_STREAM_ID = 100
UI_STATE_STREAM_ID = 101
COMMAND_STREAM_ID = 200
DETECTION_STREAM_ID = 201
LLM_TRACE_STREAM_ID = 202
CONTROLLER_TRACE_STREAM_ID = 203

def server_stream_descriptors() -> tuple[StreamDescriptor, ...]:
    return (
        StreamDescriptor(UI_TEXT_STREAM_ID, "server_ui_text", StreamKind.TEXT_INPUT),
        StreamDescriptor(UI_STATE_STREAM_ID, "server_ui_state", StreamKind.INTERFACE_STATE),
        StreamDescriptor(COMMAND_STREAM_ID, "server_commands", StreamKind.INTERFACE_COMMAND),
        StreamDescriptor(DETECTION_STREAM_ID, "server_detections", StreamKind.DETECTION),
        StreamDescriptor(LLM_TRACE_STREAM_ID, "server_llm_trace", StreamKind.LLM_TRACE),
        StreamDescriptor(CONTROLLER_TRACE_STREAM_ID, "server_controller_trace", StreamKind.CONTROLLER_TRACE),
    )


class PipelineError(RuntimeError):
    pass


@dataclasses.dataclass
class PipelineReport:
    envelopes_in: int = 0
    commands_out: int = 0
    detection_results: int = 0
    llm_completions: int = 0
    utterances: int = 0


def _snake(name: str) -> str:
    out = [name[0].lower()]
    for ch in name[1:]:
        if ch.isupper():
            out.append("_")
            out.append(ch.lower())
        else:
            out.append(ch)
    return "".join(out)


def _event_to_json(event: ControllerEvent) -> dict:
    obj = {"type": _snake(type(event).__name__)}
    for field in dataclasses.fields(event):
        value = getattr(event, field.name)
        if isinstance(value, tuple):
            value = list(value)
        obj[field.name] = value
    return obj


class SessionPipeline:
    def __init__(
        self,
        *,
        store_root: Path,
        library: TaskLibrary,
        mode: str = "library",
        llm,
        detector=None,
        transcriber=None,
        geometry: GeometryConfig | None = None,
        flush_interval_s: float = 5.0,
        on_command: Callable[[SensorEnvelope, dict], None] | None = None,
        session_id: str | None = None,
        _clock: Callable[[], float] = time.monotonic,
    ) -> None:
        self.store_root = Path(store_root)
        self.library = library
        self.mode = mode
        self.llm = llm
        self.gate = DetectorGate(detector) if detector is not None else None
        self.transcriber = transcriber
        self.geometry = geometry or GeometryConfig()
        self.flush_interval_s = flush_interval_s
        self.on_command = on_command or (lambda env, obj: None)
        self._forced_session_id = session_id
        self._clock = _clock

        self.prompts = load_prompt_library()
        self.writer: SessionWriter | None = None
        self.manifest: StreamManifest | None = None
        self.state = None
        self.now_ns = 0
        self.report = PipelineReport()
        self._kinds: dict[int, StreamKind] = {}
        self._last_emit: dict[int, int] = {}
        self._pairer = RgbdPairer(int(round(self.geometry.sync_tolerance_ms * 1e6)))
        self._tracker = ObjectTracker(self.geometry.merge_radius_m, self.geometry.smoothing_alpha)
        # Depth geometry for in-flight detection requests. The gate holds at
        # most one in-flight plus one queued request; anything older was
        # superseded and will never complete.
        self._pending_frames: OrderedDict[str, tuple[CameraModel, Pose, np.ndarray]] = OrderedDict()
        self._det_seq = 1
        self._segmenter = UtteranceSegmenter()
        self._audio_rate: int | None = None
        self._finished = False

    # -- session lifecycle -----------------------------------------------

    @property
    def started(self) -> bool:
        return self.writer is not None

    @property
    def session_id(self) -> str | None:
        return self.manifest.session_id if self.manifest is not None else None

    @property
    def session_dir(self) -> Path | None:
        return self.writer.directory if self.writer is not None else None

    def start(self, input_manifest: StreamManifest, *, session_id: str | None = None) -> None:
        """Open the session store. Input streams carry client kinds only; the
        derived server streams are appended on fixed ids."""
        if self.writer is not None:
            raise PipelineError("session already started")
        streams = list(input_manifest.streams)
        have = {s.stream_id for s in streams}
        for s in streams:
            if s.kind not in CLIENT_KINDS:
                raise SchemaViolation(f"input stream {s.name}: kind {s.kind.value} is server-derived")
            if s.stream_id >= COMMAND_STREAM_ID:
                raise SchemaViolation(f"input stream {s.name}: id {s.stream_id} is reserved")
        for desc in server_stream_descriptors():
            if desc.stream_id not in have:
                streams.append(desc)
        manifest = StreamManifest(
            session_id=session_id or self._forced_session_id or new_session_id(),
            epoch_utc_us=input_manifest.epoch_utc_us,
            streams=tuple(streams),
        )
        self.manifest = manifest
        self._kinds = {s.stream_id: s.kind for s in manifest.streams}
        self.writer = SessionWriter(
            self.store_root, manifest, flush_interval_s=self.flush_interval_s, _clock=self._clock
        )
        self.state = initial_state(self.library, self.mode)

    def process(self, env: SensorEnvelope) -> None:
        """Feed one input envelope, in originating-time order across streams."""
        if self._finished:
            raise PipelineError("pipeline already finished")
        if self.writer is None:
            manifest = decode_manifest_envelope(env)
            self.start(manifest)
            self.now_ns = env.originating_time
            self.report.envelopes_in += 1
            self._apply(SessionStarted())
            self._poll_services()
            return
        if env.stream_id == MANIFEST_STREAM_ID:
            raise SchemaViolation("duplicate manifest envelope")
        kind = self._kinds.get(env.stream_id)
        if kind is None:
            raise SchemaViolation(f"envelope on undeclared stream {env.stream_id}")
        if env.stream_id >= COMMAND_STREAM_ID:
            raise SchemaViolation(f"stream {env.stream_id} is server-owned")
        self.report.envelopes_in += 1
        self.now_ns = max(self.now_ns, env.originating_time)
        self.writer.append(env)  # keep exactly what arrived, even if dispatch fails
        self._expire_timers()
        payload = decode_payload(kind, env.payload)
        self._dispatch(kind, env.originating_time, payload)
        self._poll_services()

    def inject(self, stream_id: int, payload) -> SensorEnvelope:
        """Server-side input (operator console): stamped into session time."""
        if self.writer is None:
            raise PipelineError("no session yet")
        t = self._next_time(stream_id)
        env = SensorEnvelope(stream_id, t, encode_payload(payload))
        self.process(env)
        return env

    def finish(self) -> PipelineReport:
        """End of input: settle pairing, drain services, close the store."""
        if self._finished:
            return self.report
        self._finished = True
        if self.writer is None:
            return self.report
        for pair in self._pairer.flush():
            self._consider_detection(pair)
        self._poll_services()
        self._drain_slow_services()
        if self.transcriber is not None and self._audio_rate:
            for utterance in self._segmenter.flush():
                self._transcribe(utterance)
            self._poll_services()
        self.writer.close()
        return self.report

    def _drain_slow_services(self) -> None:
        # HTTP backends finish work on their own threads; mocks are already
        # settled by the time we get here.
        deadline = self._clock() + 2.0
        if hasattr(self.llm, "drain"):
            for completion in self.llm.drain(2.0):
                self._handle_llm(completion)
            self._poll_services()
        while self.gate is not None and not self.gate.idle and self._clock() < deadline:
            results = self.gate.poll()
            for result in results:
                self._handle_detection(result)
            if results:
                self._poll_services()
            else:
                time.sleep(0.01)

    # -- input dispatch -----------------------------------------------------

    def _dispatch(self, kind: StreamKind, time_ns: int, payload) -> None:
        if kind is StreamKind.RGB_CAMERA:
            for pair in self._pairer.push_rgb(time_ns, payload):
                self._consider_detection(pair)
        elif kind is StreamKind.DEPTH_CAMERA:
            for pair in self._pairer.push_depth(time_ns, payload):
                self._consider_detection(pair)
        elif kind is StreamKind.TEXT_INPUT:
            self.report.utterances += 1
            self._apply(FinalUtterance(payload.text))
        elif kind is StreamKind.INTERFACE_STATE:
            self._apply(InterfaceUpdate(payload.palm_open_up, payload.panel_pose))
            if payload.synthesis is not None and payload.synthesis.kind == "finished":
                self._apply(SynthesisFinished(payload.synthesis.utterance_id))
        elif kind is StreamKind.AUDIO:
            if self.transcriber is not None:
                self._audio_rate = payload.sample_rate_hz
                for utterance in self._segmenter.push(payload.samples, payload.sample_rate_hz):
                    self._transcribe(utterance)
        # preview_camera, eye_gaze, head_pose, hands: record-only.

    def _transcribe(self, samples: np.ndarray) -> None:
        for event in self.transcriber.push_audio(samples, self._audio_rate):
            if event.kind == FINAL and event.text:
                self.report.utterances += 1
                self._apply(FinalUtterance(event.text))

    # -- perception -----------------------------------------------------------

    def _consider_detection(self, pair) -> None:
        if self.gate is None:
            return
        vocabulary = detection_vocabulary(self.state)
        if not vocabulary:
            return
        depth: CameraFramePayload = pair.depth
        model = CameraModel.from_frame(depth)
        pose = Pose(depth.camera_to_world)
        depth_mm = np.frombuffer(depth.pixels, dtype="<u2").reshape(depth.height, depth.width)
        correlation_id = f"det-{self._det_seq}"
        self._det_seq += 1
        self._pending_frames[correlation_id] = (model, pose, depth_mm)
        while len(self._pending_frames) > 2:  # superseded requests never complete
            self._pending_frames.popitem(last=False)
        self.gate.offer(DetectionRequest(correlation_id, pair.depth_time, vocabulary, model, pose))

    def _handle_detection(self, result: DetectionResult) -> None:
        self.report.detection_results += 1
        self._emit(
            DETECTION_STREAM_ID,
            {
                "correlation_id": result.correlation_id,
                "frame_time_ns": result.frame_time_ns,
                "ok": result.ok,
                "error": result.error,
                "masks": [
                    {"label": m.label, "confidence": m.confidence, "rle": m.rle}
                    for m in result.masks
                ],
            },
        )
        frame = self._pending_frames.pop(result.correlation_id, None)
        if frame is None or not result.ok or not result.masks:
            return
        model, pose, depth_mm = frame
        cloud = backproject_depth(depth_mm, model, pose, max_range_mm=self.geometry.max_range_mm)
        detections: list[Detection3d] = []
        for m in result.masks:
            mask = rle_to_mask(m.rle)
            if mask.shape != (model.height, model.width):
                raise SchemaViolation(
                    f"detector mask {mask.shape} does not match frame {(model.height, model.width)}"
                )
            indices = mask_subcloud(cloud, mask, model, pose)
            if len(indices) < self.geometry.min_points:
                continue
            centroid = centroid_of(cloud, indices)
            detections.append(Detection3d(m.label, tuple(float(v) for v in centroid), len(indices)))
        for found in self._tracker.update(detections, result.frame_time_ns):
            self._apply(ObjectSpotted(found.track_id, found.label, found.position))

    # -- services ----------------------------------------------------------------

    def _poll_services(self) -> None:
        # A completion can trigger a new synchronous mock submission (e.g.
        # question list -> recipe request), so poll until quiescent.
        for _ in range(100):
            progress = False
            if self.gate is not None:
                for result in self.gate.poll():
                    progress = True
                    self._handle_detection(result)
            for completion in self.llm.poll():
                progress = True
                self._handle_llm(completion)
            if not progress:
                return
        raise PipelineError("service completion cascade did not settle")

    def _handle_llm(self, completion: LlmCompletion) -> None:
        self.report.llm_completions += 1
        self._emit(
            LLM_TRACE_STREAM_ID,
            {
                "kind": "completion",
                "correlation_id": completion.correlation_id,
                "ok": completion.ok,
                "backend": completion.backend,
                "text": completion.text,
                "error": completion.error,
            },
        )
        self._apply(
            LlmResult(completion.correlation_id, completion.text, completion.ok, completion.error)
        )

    # -- controller plumbing --------------------------------------------------------

    def _expire_timers(self) -> None:
        transition = timer_tick(self.state, self.now_ns)
        if transition.state is not self.state:
            self._apply_transition(transition, {"type": "timer_tick"})

    def _apply(self, event: ControllerEvent) -> None:
        transition = advance(self.state, event, self.now_ns)
        self._apply_transition(transition, _event_to_json(event))

    def _apply_transition(self, transition: Transition, event_json: dict) -> None:
        self.state = transition.state
        self._emit(
            CONTROLLER_TRACE_STREAM_ID,
            {
                "event": event_json,
                "phase": self.state.phase.value,
                "commands": [command_to_json_obj(c)["type"] for c in transition.commands],
                "requests": [r.correlation_id for r in transition.llm_requests],
            },
        )
        for request in transition.llm_requests:
            template = self.prompts.get(request.template_id)
            rendered = render_prompt(template, request.bindings)
            self._emit(
                LLM_TRACE_STREAM_ID,
                {
                    "kind": "request",
                    "correlation_id": request.correlation_id,
                    "template_id": request.template_id,
                    "fixture_key": fixture_key(request.template_id, request.bindings),
                    "bindings": dict(sorted(request.bindings.items())),
                    "rendered": rendered,
                },
            )
            self.llm.submit(
                LlmQuery(request.correlation_id, request.template_id, request.bindings, rendered)
            )
        for command in transition.commands:
            obj = command_to_json_obj(command)
            env = self._emit(COMMAND_STREAM_ID, obj)
            self.report.commands_out += 1
            self.on_command(env, obj)

    # -- derived stream emission ------------------------------------------------------

    def _next_time(self, stream_id: int) -> int:
        t = max(self._last_emit.get(stream_id, -1) + 1, self.now_ns)
        self._last_emit[stream_id] = t
        return t

    def _emit(self, stream_id: int, obj: dict) -> SensorEnvelope:
        env = SensorEnvelope(stream_id, self._next_time(stream_id), canonical_json_bytes(obj))
        self.writer.append(env)
        return env
