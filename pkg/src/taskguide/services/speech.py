"""Speech-to-text clients.

The pipeline feeds audio chunks and typed text into a transcriber and gets
back ordered partial/final events. The mock passes typed text through as a
single final event and ignores audio, which keeps scripted sessions
deterministic; the HTTP client relays whatever event sequence the service
returns (order preserved).
"""

from __future__ import annotations

from dataclasses import dataclass

import httpx
import numpy as np

DEFAULT_TIMEOUT_S = 30.0

PARTIAL = "partial"
FINAL = "final"


@dataclass(frozen=True)
class SpeechEvent:
    kind: str  # "partial" | "final"
    text: str

    def __post_init__(self) -> None:
        if self.kind not in (PARTIAL, FINAL):
            raise ValueError(f"bad speech event kind {self.kind!r}")


class MockTranscriber:
    backend_name = "mock"

    def push_audio(self, samples: np.ndarray, sample_rate_hz: int) -> list[SpeechEvent]:
        return []

    def push_text(self, text: str) -> list[SpeechEvent]:
        return [SpeechEvent(FINAL, text)]

    def close(self) -> None:
        pass


class UtteranceSegmenter:
    """Groups audio chunks into utterances by amplitude gating.

    An utterance starts at the first chunk whose peak exceeds `threshold` and
    ends once `hang_s` seconds of quiet have followed it. Pure function of the
    sample values, so recorded sessions segment identically on replay.
    """

    def __init__(self, threshold: float = 1e-3, hang_s: float = 0.5) -> None:
        self.threshold = threshold
        self.hang_s = hang_s
        self._chunks: list[np.ndarray] = []
        self._quiet_s = 0.0

    def push(self, samples: np.ndarray, sample_rate_hz: int) -> list[np.ndarray]:
        samples = np.asarray(samples, dtype=np.float32)
        loud = samples.size > 0 and float(np.abs(samples).max()) > self.threshold
        out: list[np.ndarray] = []
        if loud:
            self._chunks.append(samples)
            self._quiet_s = 0.0
        elif self._chunks:
            self._chunks.append(samples)
            self._quiet_s += samples.size / sample_rate_hz
            if self._quiet_s >= self.hang_s:
                out.extend(self.flush())
        return out

    def flush(self) -> list[np.ndarray]:
        if not self._chunks:
            return []
        utterance = np.concatenate(self._chunks)
        self._chunks = []
        self._quiet_s = 0.0
        return [utterance]


class HttpTranscriber:
    """Synchronous relay to {base_url}/transcribe.

    Speech events gate dialog progress, so unlike the LLM/detector clients
    this one blocks: an utterance must be transcribed before later envelopes
    can mean anything. Failures surface as an empty event list.
    """

    backend_name = "http"

    def __init__(self, base_url: str, timeout_s: float = DEFAULT_TIMEOUT_S) -> None:
        self.base_url = base_url.rstrip("/")
        self._client = httpx.Client(timeout=timeout_s)
        self.errors = 0

    def _post(self, body: dict) -> list[SpeechEvent]:
        try:
            response = self._client.post(self.base_url + "/transcribe", json=body)
            response.raise_for_status()
            return [SpeechEvent(str(e["kind"]), str(e["text"])) for e in response.json()["events"]]
        except Exception:
            self.errors += 1
            return []

    def push_audio(self, samples: np.ndarray, sample_rate_hz: int) -> list[SpeechEvent]:
        return self._post({"sample_count": int(len(samples)), "sample_rate_hz": sample_rate_hz})

    def push_text(self, text: str) -> list[SpeechEvent]:
        return self._post({"text": text})

    def close(self) -> None:
        self._client.close()
