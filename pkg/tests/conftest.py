"""Shared test helpers."""

from __future__ import annotations

import contextlib
import random
import socket
import threading
import time

import pytest
import uvicorn

from taskguide.wire import SensorEnvelope, StreamDescriptor, StreamKind, StreamManifest


def free_port() -> int:
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


@contextlib.contextmanager
def run_app(app, port: int | None = None):
    """Serve an ASGI app with uvicorn in a thread; yields its base URL."""
    port = port or free_port()
    config = uvicorn.Config(app, host="127.0.0.1", port=port, log_level="warning")
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.monotonic() + 10
    while not server.started:
        if time.monotonic() > deadline or not thread.is_alive():
            raise RuntimeError("uvicorn failed to start")
        time.sleep(0.01)
    try:
        yield f"http://127.0.0.1:{port}"
    finally:
        server.should_exit = True
        thread.join(timeout=5)


def make_manifest(
    streams: list[tuple[int, str, StreamKind, float | None]],
    session_id: str = "0" * 32,
    epoch_utc_us: int = 1_700_000_000_000_000,
) -> StreamManifest:
    return StreamManifest(
        session_id=session_id,
        epoch_utc_us=epoch_utc_us,
        streams=tuple(StreamDescriptor(*s) for s in streams),
    )


def random_envelopes(
    rng: random.Random,
    count: int,
    stream_ids: list[int],
    max_payload: int = 256,
) -> list[SensorEnvelope]:
    """Random envelopes with strictly increasing per-stream times, in send order."""
    last: dict[int, int] = {}
    out: list[SensorEnvelope] = []
    t = 0
    for _ in range(count):
        sid = rng.choice(stream_ids)
        t += rng.randint(0, 1000)
        start = max(t, last.get(sid, -1) + 1)
        last[sid] = start
        t = start
        payload = rng.randbytes(rng.randint(0, max_payload))
        out.append(SensorEnvelope(sid, start, payload))
    return out


@pytest.fixture
def rng() -> random.Random:
    return random.Random(0xC0FFEE)
