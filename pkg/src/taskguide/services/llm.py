"""LLM completion clients.

Both backends share one contract: submit() never blocks the pipeline, poll()
returns finished completions in submit order. The mock resolves from a
fixture map keyed "template_id:bindings_hash" and completes synchronously, so
replays are deterministic. The HTTP backend drives a stub (or real) service
from a single worker thread.
"""

from __future__ import annotations

import json
import queue
import threading
from dataclasses import dataclass
from pathlib import Path

import httpx

from .prompts import fixture_key

DEFAULT_TIMEOUT_S = 30.0
MOCK_UNKNOWN_TEXT = "MOCK-UNKNOWN"


@dataclass(frozen=True)
class LlmQuery:
    correlation_id: str
    template_id: str
    bindings: dict
    rendered: str


@dataclass(frozen=True)
class LlmCompletion:
    correlation_id: str
    text: str
    backend: str
    ok: bool = True
    error: str | None = None


class FixtureError(ValueError):
    pass


def load_llm_fixtures(path: Path) -> dict[str, str]:
    """Fixture file: a flat JSON map "template_id:bindings_hash" -> response text."""
    try:
        obj = json.loads(Path(path).read_text("utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise FixtureError(f"cannot read fixtures: {exc}") from exc
    if not isinstance(obj, dict) or not all(
        isinstance(k, str) and isinstance(v, str) for k, v in obj.items()
    ):
        raise FixtureError("fixtures must be a flat string-to-string map")
    return obj


class MockLlm:
    """Synchronous fixture-backed backend. Unknown queries resolve to a
    sentinel text instead of failing, so unscripted utterances degrade
    gracefully and identically on every run."""

    backend_name = "mock"

    def __init__(self, fixtures: dict[str, str]) -> None:
        self._fixtures = fixtures
        self._ready: list[LlmCompletion] = []
        self.submitted = 0

    def submit(self, query: LlmQuery) -> None:
        self.submitted += 1
        text = self._fixtures.get(fixture_key(query.template_id, query.bindings), MOCK_UNKNOWN_TEXT)
        self._ready.append(LlmCompletion(query.correlation_id, text, self.backend_name))

    def poll(self) -> list[LlmCompletion]:
        out, self._ready = self._ready, []
        return out

    def close(self) -> None:
        pass


class HttpLlm:
    """POSTs rendered queries to {base_url}/complete from one worker thread.

    A single worker keeps completion order equal to submit order. Timeouts
    and transport errors come back as failed completions, never exceptions.
    """

    backend_name = "http"

    def __init__(self, base_url: str, timeout_s: float = DEFAULT_TIMEOUT_S) -> None:
        self.base_url = base_url.rstrip("/")
        self.timeout_s = timeout_s
        self.submitted = 0
        self._work: queue.Queue[LlmQuery | None] = queue.Queue()
        self._done: queue.Queue[LlmCompletion] = queue.Queue()
        self._client = httpx.Client(timeout=timeout_s)
        self._worker = threading.Thread(target=self._run, name="llm-http", daemon=True)
        self._worker.start()

    def _run(self) -> None:
        while True:
            query = self._work.get()
            if query is None:
                return
            try:
                response = self._client.post(
                    self.base_url + "/complete",
                    json={
                        "correlation_id": query.correlation_id,
                        "template_id": query.template_id,
                        "bindings": query.bindings,
                        "rendered": query.rendered,
                    },
                )
                response.raise_for_status()
                text = response.json()["text"]
                self._done.put(LlmCompletion(query.correlation_id, str(text), self.backend_name))
            except Exception as exc:  # timeout, transport, bad payload
                self._done.put(
                    LlmCompletion(query.correlation_id, "", self.backend_name, ok=False, error=repr(exc))
                )

    def submit(self, query: LlmQuery) -> None:
        self.submitted += 1
        self._work.put(query)

    def poll(self) -> list[LlmCompletion]:
        out = []
        while True:
            try:
                out.append(self._done.get_nowait())
            except queue.Empty:
                return out

    def drain(self, deadline_s: float) -> list[LlmCompletion]:
        """Blocking poll used at end of session to collect stragglers."""
        try:
            first = self._done.get(timeout=deadline_s)
        except queue.Empty:
            return []
        return [first] + self.poll()

    def close(self) -> None:
        self._work.put(None)
        self._worker.join(timeout=5)
        self._client.close()
