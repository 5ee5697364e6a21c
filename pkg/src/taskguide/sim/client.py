"""Headset simulator: a wire-protocol client that plays a scenario.

Every envelope is scheduled on a virtual clock keyed (time, stream_id), so one
run produces one well-defined input sequence; time_scale only stretches the
wall-clock pacing of that same sequence (0 = as fast as possible). Incoming
Speak commands are answered with synthesis started/finished interface-state
events, closing the dialog loop the way a real headset would.
"""

from __future__ import annotations

import heapq
import json
import socket
import threading
import time
from dataclasses import dataclass, field

import numpy as np

from ..geometry import CameraModel, Pose
from ..scene import render_depth_z, to_depth16
from ..wire import (
    AudioPayload,
    CameraFramePayload,
    FrameDecoder,
    GazePayload,
    HandsPayload,
    InterfaceStatePayload,
    PixelEncoding,
    PosePayload,
    SensorEnvelope,
    StreamDescriptor,
    StreamKind,
    StreamManifest,
    SynthesisEvent,
    TextInputPayload,
    encode_envelope,
    encode_manifest_envelope,
    encode_payload,
    new_session_id,
    nv12_size,
)
from .scenario import Scenario, camera_pose_at

DEPTH_STREAM_ID = 1
RGB_STREAM_ID = 2
GAZE_STREAM_ID = 3
HEAD_STREAM_ID = 4
HANDS_STREAM_ID = 5
AUDIO_STREAM_ID = 6
TEXT_STREAM_ID = 7
STATE_STREAM_ID = 8

DEPTH_MODEL = CameraModel(width=320, height=288, fx=190.0, fy=190.0, cx=160.0, cy=144.0)
RGB_MODEL = CameraModel(width=896, height=504, fx=680.0, fy=680.0, cx=448.0, cy=252.0)
# RGB sensor sits a small horizontal baseline away from the depth sensor.
_RGB_OFFSET = Pose.from_rotation_translation(np.eye(3), np.array([0.02, 0.0, 0.0]))

_RATES_HZ = {
    DEPTH_STREAM_ID: 5.0,
    RGB_STREAM_ID: 5.0,
    GAZE_STREAM_ID: 30.0,
    HEAD_STREAM_ID: 30.0,
    HANDS_STREAM_ID: 20.0,
    AUDIO_STREAM_ID: 10.0,
}
_AUDIO_RATE_HZ = 16000
_SYNTH_S_PER_WORD = 0.06

NS = 1_000_000_000


def sim_manifest(session_id: str | None = None) -> StreamManifest:
    return StreamManifest(
        session_id=session_id or new_session_id(),
        epoch_utc_us=int(time.time() * 1e6),
        streams=(
            StreamDescriptor(DEPTH_STREAM_ID, "depth_camera", StreamKind.DEPTH_CAMERA, 5.0),
            StreamDescriptor(RGB_STREAM_ID, "rgb_camera", StreamKind.RGB_CAMERA, 5.0),
            StreamDescriptor(GAZE_STREAM_ID, "eye_gaze", StreamKind.EYE_GAZE, 30.0),
            StreamDescriptor(HEAD_STREAM_ID, "head_pose", StreamKind.HEAD_POSE, 30.0),
            StreamDescriptor(HANDS_STREAM_ID, "hands", StreamKind.HANDS, 20.0),
            StreamDescriptor(AUDIO_STREAM_ID, "audio", StreamKind.AUDIO, 10.0),
            StreamDescriptor(TEXT_STREAM_ID, "text_input", StreamKind.TEXT_INPUT),
            StreamDescriptor(STATE_STREAM_ID, "interface_state", StreamKind.INTERFACE_STATE),
        ),
    )


@dataclass
class SimReport:
    session_id: str = ""
    sent: dict[str, int] = field(default_factory=dict)
    commands_received: int = 0
    commands_by_type: dict[str, int] = field(default_factory=dict)
    speaks: list[str] = field(default_factory=list)
    duration_s: float = 0.0


class SimClient:
    def __init__(self, host: str, port: int, scenario: Scenario, time_scale: float = 0.0) -> None:
        if time_scale < 0:
            raise ValueError("time_scale must be >= 0 (0 = unpaced)")
        self.host = host
        self.port = port
        self.scenario = scenario
        self.time_scale = time_scale
        self.report = SimReport()
        self._palm = False
        self._inbox: list[tuple[int, str]] = []  # (utterance_id, text) pending synthesis
        self._inbox_lock = threading.Lock()
        self._audio_chunk = np.zeros(int(_AUDIO_RATE_HZ / _RATES_HZ[AUDIO_STREAM_ID]), dtype=np.float32)
        self._nv12 = bytes(nv12_size(RGB_MODEL.width, RGB_MODEL.height))

    # -- payload builders ------------------------------------------------

    def _depth_payload(self, pose: Pose) -> CameraFramePayload:
        z = render_depth_z(self.scenario.scene, DEPTH_MODEL, pose)
        return CameraFramePayload(
            PixelEncoding.DEPTH16, DEPTH_MODEL.width, DEPTH_MODEL.height,
            DEPTH_MODEL.fx, DEPTH_MODEL.fy, DEPTH_MODEL.cx, DEPTH_MODEL.cy,
            pose.matrix, to_depth16(z).tobytes(),
        )

    def _rgb_payload(self, pose: Pose) -> CameraFramePayload:
        rgb_pose = pose.compose(_RGB_OFFSET)
        return CameraFramePayload(
            PixelEncoding.NV12, RGB_MODEL.width, RGB_MODEL.height,
            RGB_MODEL.fx, RGB_MODEL.fy, RGB_MODEL.cx, RGB_MODEL.cy,
            rgb_pose.matrix, self._nv12,
        )

    def _sensor_payload(self, stream_id: int, t_s: float):
        pose = camera_pose_at(self.scenario, t_s)
        if stream_id == DEPTH_STREAM_ID:
            return self._depth_payload(pose)
        if stream_id == RGB_STREAM_ID:
            return self._rgb_payload(pose)
        if stream_id == GAZE_STREAM_ID:
            return GazePayload(pose.translation, pose.rotation[:, 2])
        if stream_id == HEAD_STREAM_ID:
            return PosePayload(pose.matrix)
        if stream_id == HANDS_STREAM_ID:
            return HandsPayload(None, None)
        if stream_id == AUDIO_STREAM_ID:
            return AudioPayload(_AUDIO_RATE_HZ, self._audio_chunk)
        raise AssertionError(stream_id)

    # -- inbound commands ---------------------------------------------------

    def _reader(self, sock: socket.socket) -> None:
        decoder = FrameDecoder()
        try:
            while True:
                data = sock.recv(1 << 16)
                if not data:
                    return
                for env in decoder.feed(data):
                    self._on_command(env)
        except OSError:
            return

    def _on_command(self, env: SensorEnvelope) -> None:
        obj = json.loads(bytes(env.payload))
        self.report.commands_received += 1
        kind = obj.get("type", "?")
        self.report.commands_by_type[kind] = self.report.commands_by_type.get(kind, 0) + 1
        if kind == "speak":
            self.report.speaks.append(obj["text"])
            with self._inbox_lock:
                self._inbox.append((obj["utterance_id"], obj["text"]))

    def _drain_inbox(self, heap: list, vt_ns: int) -> None:
        """Schedule synthesis started/finished for newly heard speaks.

        Scheduling through the heap (instead of sending immediately) keeps the
        byte stream ordered by (time, stream_id), so the server's arrival order
        equals the store's merge order and a replay sees the same sequence.
        """
        with self._inbox_lock:
            pending, self._inbox = self._inbox, []
        for utterance_id, text in pending:
            words = max(1, len(text.split()))
            heapq.heappush(heap, (vt_ns, STATE_STREAM_ID, "synth", (utterance_id, "started")))
            finish_ns = vt_ns + int(words * _SYNTH_S_PER_WORD * NS)
            heapq.heappush(heap, (finish_ns, STATE_STREAM_ID, "synth", (utterance_id, "finished")))

    # -- main loop --------------------------------------------------------------

    def run(self) -> SimReport:
        scenario = self.scenario
        manifest = sim_manifest()
        self.report.session_id = manifest.session_id
        end_ns = int(scenario.duration_s * NS)

        # (time_ns, stream_id, kind, arg), popped in the store's merge order.
        heap: list[tuple[int, int, str, object]] = []
        for stream_id, rate in _RATES_HZ.items():
            period = int(NS / rate)
            heapq.heappush(heap, (period, stream_id, "sensor", None))
        for event in scenario.events:
            t = int(event.at_s * NS)
            if event.say is not None:
                heapq.heappush(heap, (t, TEXT_STREAM_ID, "say", event.say))
            if event.palm_open is not None:
                heapq.heappush(heap, (t, STATE_STREAM_ID, "palm", event.palm_open))

        last_sent: dict[int, int] = {}  # per-stream last originating time
        vt_ns = 0

        wall_start = time.monotonic()
        with socket.create_connection((self.host, self.port)) as sock:
            reader = threading.Thread(target=self._reader, args=(sock,), daemon=True)
            reader.start()
            sock.sendall(encode_envelope(encode_manifest_envelope(manifest)))
            self._count("manifest")

            def send(env: SensorEnvelope) -> None:
                last_sent[env.stream_id] = env.originating_time
                sock.sendall(encode_envelope(env))
                self._count(self._stream_name(env.stream_id))

            def pump() -> None:
                nonlocal vt_ns
                while heap:
                    t_ns, stream_id, kind, arg = heapq.heappop(heap)
                    # A scripted event can land on a time this stream already
                    # used; nudging it forward through the heap (not past it)
                    # keeps per-stream times strictly increasing in order.
                    if kind != "sensor" and t_ns <= last_sent.get(stream_id, -1):
                        heapq.heappush(heap, (last_sent[stream_id] + 1, stream_id, kind, arg))
                        continue
                    vt_ns = max(vt_ns, t_ns)
                    if self.time_scale > 0:
                        target = wall_start + t_ns / NS * self.time_scale
                        delay = target - time.monotonic()
                        if delay > 0:
                            time.sleep(delay)
                    if kind == "sensor":
                        if t_ns > end_ns:
                            continue  # past the scenario: let the stream end
                        payload = self._sensor_payload(stream_id, t_ns / NS)
                        send(SensorEnvelope(stream_id, t_ns, encode_payload(payload)))
                        next_t = t_ns + int(NS / _RATES_HZ[stream_id])
                        if next_t <= end_ns:
                            heapq.heappush(heap, (next_t, stream_id, "sensor", None))
                    elif kind == "say":
                        send(SensorEnvelope(TEXT_STREAM_ID, t_ns, encode_payload(TextInputPayload(arg))))
                    elif kind == "palm":
                        self._palm = bool(arg)
                        payload = InterfaceStatePayload(palm_open_up=self._palm)
                        send(SensorEnvelope(STATE_STREAM_ID, t_ns, encode_payload(payload)))
                    elif kind == "synth":
                        utterance_id, phase = arg
                        payload = InterfaceStatePayload(
                            self._palm, None, SynthesisEvent(utterance_id, phase)
                        )
                        send(SensorEnvelope(STATE_STREAM_ID, t_ns, encode_payload(payload)))
                    else:
                        raise AssertionError(kind)
                    self._drain_inbox(heap, vt_ns)

            pump()
            # Commands for the last scripted events may still be in flight;
            # give them a moment and acknowledge their synthesis too.
            time.sleep(0.05 if self.time_scale == 0 else 0.2)
            self._drain_inbox(heap, max(vt_ns, end_ns))
            pump()
            sock.shutdown(socket.SHUT_WR)
            reader.join(timeout=10.0)
        self.report.duration_s = time.monotonic() - wall_start
        return self.report

    def _stream_name(self, stream_id: int) -> str:
        return {
            DEPTH_STREAM_ID: "depth_camera",
            RGB_STREAM_ID: "rgb_camera",
            GAZE_STREAM_ID: "eye_gaze",
            HEAD_STREAM_ID: "head_pose",
            HANDS_STREAM_ID: "hands",
            AUDIO_STREAM_ID: "audio",
            TEXT_STREAM_ID: "text_input",
            STATE_STREAM_ID: "interface_state",
        }[stream_id]

    def _count(self, name: str) -> None:
        self.report.sent[name] = self.report.sent.get(name, 0) + 1
