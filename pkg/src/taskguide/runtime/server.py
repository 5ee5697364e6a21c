"""Live session server.

One TCP client (the headset or the sim) speaks the framed wire protocol both
ways: sensor envelopes in, command envelopes out. A reader thread decodes
frames into a queue; a single worker thread drives the pipeline, which keeps
the processing order identical to what the store will say it was. Operator
input (websocket bridge, tests) enters through the same queue.
"""

from __future__ import annotations

import queue
import socket
import threading
from typing import Callable

from ..wire import (
    FrameDecoder,
    InterfaceStatePayload,
    SensorEnvelope,
    TextInputPayload,
    WireError,
    encode_envelope,
)
from .config import (
    ServerConfig,
    build_detector,
    build_library,
    build_llm,
    build_transcriber,
)
from .pipeline import UI_STATE_STREAM_ID, UI_TEXT_STREAM_ID, SessionPipeline

_RECV_BYTES = 1 << 16


class SessionServer:
    """Accepts one client session and runs it to completion."""

    def __init__(
        self,
        config: ServerConfig,
        *,
        llm=None,
        detector=None,
        transcriber=None,
        log: Callable[[str], None] = lambda msg: None,
    ) -> None:
        self.config = config
        self.log = log
        self._llm = llm if llm is not None else build_llm(config.llm)
        self._detector = detector if detector is not None else build_detector(config.detector)
        self._transcriber = transcriber if transcriber is not None else build_transcriber(config.asr)
        self.pipeline = SessionPipeline(
            store_root=config.store_root,
            library=build_library(config),
            mode=config.mode,
            llm=self._llm,
            detector=self._detector,
            transcriber=self._transcriber,
            geometry=config.geometry,
            on_command=self._on_command,
        )
        self._queue: queue.Queue[tuple] = queue.Queue()
        self._listener: socket.socket | None = None
        self._client: socket.socket | None = None
        self._client_lock = threading.Lock()
        self._threads: list[threading.Thread] = []
        self._command_listeners: list[Callable[[int, dict], None]] = []
        self._stopping = False
        self.done = threading.Event()
        self.error: Exception | None = None
        self.listen_port: int | None = None

    # -- lifecycle ---------------------------------------------------------

    def start(self) -> None:
        self._listener = socket.create_server(
            (self.config.listen_host, self.config.listen_port), reuse_port=False
        )
        self._listener.settimeout(0.25)
        self.listen_port = self._listener.getsockname()[1]
        self._threads = [
            threading.Thread(target=self._accept_loop, name="accept", daemon=True),
            threading.Thread(target=self._worker_loop, name="session", daemon=True),
        ]
        for t in self._threads:
            t.start()
        self.log(f"listening on {self.config.listen_host}:{self.listen_port}")

    def stop(self) -> None:
        """Graceful: finish the session with what has arrived so far."""
        self._stopping = True
        self._queue.put(("eof",))

    def wait(self, timeout: float | None = None) -> bool:
        return self.done.wait(timeout)

    def close(self) -> None:
        self._stopping = True
        if self._listener is not None:
            self._listener.close()
        with self._client_lock:
            if self._client is not None:
                try:
                    self._client.shutdown(socket.SHUT_RDWR)
                except OSError:
                    pass
                self._client.close()
                self._client = None
        for backend in (self._llm, self._detector, self._transcriber):
            if backend is not None:
                backend.close()

    # -- operator input ------------------------------------------------------

    def submit_utterance(self, text: str) -> None:
        self._queue.put(("ui", UI_TEXT_STREAM_ID, TextInputPayload(text)))

    def submit_step_done(self) -> None:
        self.submit_utterance("done")

    def submit_declare(self, label: str) -> None:
        self.submit_utterance(f"i have the {label}")

    def submit_palm(self, open_up: bool) -> None:
        self._queue.put(("ui", UI_STATE_STREAM_ID, InterfaceStatePayload(palm_open_up=open_up)))

    def submit_move_panel(self) -> None:
        self.submit_palm(True)
        self.submit_utterance("come here")

    def add_command_listener(self, listener: Callable[[int, dict], None]) -> Callable[[], None]:
        """listener(time_ns, command_json) fires on the session thread."""
        self._command_listeners.append(listener)
        return lambda: self._command_listeners.remove(listener)

    def status(self) -> dict:
        pipe = self.pipeline
        state = pipe.state
        return {
            "listening": self.listen_port,
            "session_id": pipe.session_id,
            "phase": state.phase.value if state is not None else None,
            "task": state.task.name if state is not None and state.task else None,
            "envelopes_in": pipe.report.envelopes_in,
            "commands_out": pipe.report.commands_out,
            "done": self.done.is_set(),
        }

    # -- internals --------------------------------------------------------------

    def _on_command(self, env: SensorEnvelope, obj: dict) -> None:
        data = encode_envelope(env)
        with self._client_lock:
            client = self._client
        if client is not None:
            try:
                client.sendall(data)
            except OSError:
                self.log("client send failed; continuing without live output")
                with self._client_lock:
                    self._client = None
        for listener in list(self._command_listeners):
            listener(env.originating_time, obj)

    def _accept_loop(self) -> None:
        assert self._listener is not None
        while not self._stopping:
            try:
                client, addr = self._listener.accept()
            except socket.timeout:
                continue
            except OSError:
                return
            self.log(f"client connected from {addr}")
            with self._client_lock:
                self._client = client
            self._read_client(client)
            return

    def _read_client(self, client: socket.socket) -> None:
        decoder = FrameDecoder()
        try:
            while True:
                data = client.recv(_RECV_BYTES)
                if not data:
                    break
                for env in decoder.feed(data):
                    self._queue.put(("env", env))
        except OSError as exc:
            if not self._stopping:
                self._queue.put(("err", exc))
                return
        except WireError as exc:
            self._queue.put(("err", exc))
            return
        self._queue.put(("eof",))

    def _worker_loop(self) -> None:
        try:
            while True:
                item = self._queue.get()
                kind = item[0]
                if kind == "env":
                    self.pipeline.process(item[1])
                elif kind == "ui":
                    if self.pipeline.started:
                        self.pipeline.inject(item[1], item[2])
                    else:
                        self.log("operator input before handshake dropped")
                elif kind in ("eof", "err"):
                    if kind == "err":
                        self.error = item[1]
                        self.log(f"session aborted: {item[1]!r}")
                    break
        except Exception as exc:  # pipeline rejected input: record and finish
            self.error = exc
            self.log(f"session failed: {exc!r}")
        finally:
            try:
                self.pipeline.finish()
            finally:
                # Closing the socket tells the client the session is over.
                with self._client_lock:
                    if self._client is not None:
                        try:
                            self._client.shutdown(socket.SHUT_RDWR)
                        except OSError:
                            pass
                        self._client.close()
                        self._client = None
                self.done.set()
