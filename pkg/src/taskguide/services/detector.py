"""Open-vocabulary object detection clients plus the drop-if-busy gate.

A detection request names the vocabulary and the RGB camera geometry of the
frame; results are per-label RLE masks in that camera's image plane. The mock
renders masks analytically from a sphere scene, completing synchronously so
replays are deterministic. The gate enforces the frame admission policy:
at most one request in flight, at most one queued, newest queued frame wins.
"""

from __future__ import annotations

import queue
import threading
from dataclasses import dataclass, field

import httpx

from ..geometry import CameraModel, Pose, mask_to_rle
from ..scene import SphereScene, render_label_masks

DEFAULT_TIMEOUT_S = 30.0


@dataclass(frozen=True)
class DetectionMask:
    label: str
    confidence: float
    rle: dict  # {"width", "height", "runs"}


@dataclass(frozen=True)
class DetectionRequest:
    correlation_id: str
    frame_time_ns: int
    vocabulary: tuple[str, ...]
    model: CameraModel
    camera_to_world: Pose


@dataclass(frozen=True)
class DetectionResult:
    correlation_id: str
    frame_time_ns: int
    masks: tuple[DetectionMask, ...]
    ok: bool = True
    error: str | None = None


class MockDetector:
    """Scripted detector: what a perfect segmenter would return for the scene.

    Only labels in the request vocabulary are rendered, and labels with no
    visible pixels are omitted entirely (an empty vocabulary or an absent
    object yields an empty result, not an empty mask).
    """

    backend_name = "mock"

    def __init__(self, scene: SphereScene) -> None:
        self.scene = scene
        self._ready: list[DetectionResult] = []

    def submit(self, request: DetectionRequest) -> None:
        masks = render_label_masks(self.scene, request.model, request.camera_to_world, sorted(request.vocabulary))
        out = tuple(
            DetectionMask(label, 1.0, mask_to_rle(mask))
            for label, mask in sorted(masks.items())
            if mask.any()
        )
        self._ready.append(DetectionResult(request.correlation_id, request.frame_time_ns, out))

    def poll(self) -> list[DetectionResult]:
        out, self._ready = self._ready, []
        return out

    def close(self) -> None:
        pass


class HttpDetector:
    """POSTs requests to {base_url}/detect from one worker thread.

    Camera geometry travels instead of pixels: the stub service renders masks
    from its configured scene, which keeps the wire cheap and scripted runs
    reproducible. See the stub service docs.
    """

    backend_name = "http"

    def __init__(self, base_url: str, timeout_s: float = DEFAULT_TIMEOUT_S) -> None:
        self.base_url = base_url.rstrip("/")
        self._work: queue.Queue[DetectionRequest | None] = queue.Queue()
        self._done: queue.Queue[DetectionResult] = queue.Queue()
        self._client = httpx.Client(timeout=timeout_s)
        self._worker = threading.Thread(target=self._run, name="detector-http", daemon=True)
        self._worker.start()

    def _run(self) -> None:
        while True:
            request = self._work.get()
            if request is None:
                return
            try:
                response = self._client.post(
                    self.base_url + "/detect",
                    json={
                        "correlation_id": request.correlation_id,
                        "frame_time_ns": request.frame_time_ns,
                        "vocabulary": list(request.vocabulary),
                        "camera": {
                            "width": request.model.width,
                            "height": request.model.height,
                            "fx": request.model.fx,
                            "fy": request.model.fy,
                            "cx": request.model.cx,
                            "cy": request.model.cy,
                            "pose": request.camera_to_world.matrix.ravel().tolist(),
                        },
                    },
                )
                response.raise_for_status()
                body = response.json()
                masks = tuple(
                    DetectionMask(str(m["label"]), float(m["confidence"]), dict(m["rle"]))
                    for m in body["masks"]
                )
                for m in masks:
                    if m.label not in request.vocabulary:
                        raise ValueError(f"service returned label {m.label!r} outside the vocabulary")
                self._done.put(DetectionResult(request.correlation_id, request.frame_time_ns, masks))
            except Exception as exc:
                self._done.put(
                    DetectionResult(request.correlation_id, request.frame_time_ns, (), ok=False, error=repr(exc))
                )

    def submit(self, request: DetectionRequest) -> None:
        self._work.put(request)

    def poll(self) -> list[DetectionResult]:
        out = []
        while True:
            try:
                out.append(self._done.get_nowait())
            except queue.Empty:
                return out

    def close(self) -> None:
        self._work.put(None)
        self._worker.join(timeout=5)
        self._client.close()


@dataclass
class GateStats:
    offered: int = 0  # frames offered to the gate
    issued: int = 0  # requests actually sent to the backend
    superseded: int = 0  # queued frames replaced by a newer one
    completed: int = 0


@dataclass
class DetectorGate:
    """Admission control: one in flight, newest-frame-wins queue of one."""

    backend: object
    stats: GateStats = field(default_factory=GateStats)
    _in_flight: bool = False
    _pending: DetectionRequest | None = None

    def offer(self, request: DetectionRequest) -> None:
        self.stats.offered += 1
        if self._in_flight:
            if self._pending is not None:
                self.stats.superseded += 1
            self._pending = request
        else:
            self._issue(request)

    def _issue(self, request: DetectionRequest) -> None:
        self.stats.issued += 1
        self._in_flight = True
        self.backend.submit(request)

    def poll(self) -> list[DetectionResult]:
        results = self.backend.poll()
        for _ in results:
            self.stats.completed += 1
            self._in_flight = False
            if self._pending is not None:
                request, self._pending = self._pending, None
                self._issue(request)
        return results

    @property
    def idle(self) -> bool:
        return not self._in_flight and self._pending is None
