"""Operator bridge: a FastAPI app exposing the live session over a websocket.

Every interface command the pipeline emits is mirrored to connected sockets
as JSON; operator actions come back as typed messages and are injected into
the session as ordinary inputs (typed text, interface state). The message
shapes here are the contract the operator frontend builds against.
"""

from __future__ import annotations

import asyncio
from typing import Literal, Union

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from pydantic import BaseModel, ConfigDict, Field, StrictBool, TypeAdapter, ValidationError

from .server import SessionServer


class _Msg(BaseModel):
    model_config = ConfigDict(extra="forbid")


class UtteranceMsg(_Msg):
    type: Literal["utterance"]
    text: str = Field(min_length=1, max_length=4096)


class StepDoneMsg(_Msg):
    type: Literal["step_done"]


class DeclareObjectMsg(_Msg):
    type: Literal["declare_object"]
    label: str = Field(min_length=1, max_length=256)


class PalmOpenMsg(_Msg):
    type: Literal["palm_open"]
    open: StrictBool


class MovePanelMsg(_Msg):
    type: Literal["move_panel"]


UiMessage = Union[UtteranceMsg, StepDoneMsg, DeclareObjectMsg, PalmOpenMsg, MovePanelMsg]
_UI_ADAPTER: TypeAdapter = TypeAdapter(UiMessage)


def _apply(server: SessionServer, msg: UiMessage) -> None:
    if isinstance(msg, UtteranceMsg):
        server.submit_utterance(msg.text)
    elif isinstance(msg, StepDoneMsg):
        server.submit_step_done()
    elif isinstance(msg, DeclareObjectMsg):
        server.submit_declare(msg.label)
    elif isinstance(msg, PalmOpenMsg):
        server.submit_palm(msg.open)
    elif isinstance(msg, MovePanelMsg):
        server.submit_move_panel()


def create_bridge_app(server: SessionServer) -> FastAPI:
    app = FastAPI(title="taskguide operator bridge")

    @app.get("/healthz")
    def healthz() -> dict:
        return {"status": "ok"}

    @app.get("/session")
    def session() -> dict:
        return server.status()

    @app.websocket("/ws")
    async def ws(sock: WebSocket) -> None:
        await sock.accept()
        loop = asyncio.get_running_loop()
        outbox: asyncio.Queue[dict] = asyncio.Queue()

        def on_command(time_ns: int, obj: dict) -> None:
            # Fires on the session thread; hop onto the loop.
            loop.call_soon_threadsafe(outbox.put_nowait, {"type": "command", "time_ns": time_ns, "command": obj})

        remove = server.add_command_listener(on_command)
        await sock.send_json({"type": "hello", **server.status()})

        async def pump() -> None:
            while True:
                await sock.send_json(await outbox.get())

        sender = asyncio.create_task(pump())
        try:
            while True:
                raw = await sock.receive_text()
                try:
                    msg = _UI_ADAPTER.validate_json(raw)
                except ValidationError as exc:
                    await sock.send_json({"type": "error", "message": str(exc.errors()[0]["msg"])})
                    continue
                _apply(server, msg)
                await sock.send_json({"type": "ack"})
        except WebSocketDisconnect:
            pass
        finally:
            sender.cancel()
            remove()

    return app
