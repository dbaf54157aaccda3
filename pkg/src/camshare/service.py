"""FastAPI session host: REST state endpoints plus the duplex WebSocket
protocol used by consoles and scripted clients.

The engine runs on a dedicated thread (single writer); WebSocket handlers
enqueue validated events and forward the engine's broadcast snapshots.
All connected clients receive byte-identical snapshot payloads.
"""
from __future__ import annotations

import asyncio
import json
import threading
import time

from fastapi import FastAPI, Query, WebSocket, WebSocketDisconnect
from pydantic import BaseModel

from . import __version__
from .engine import Engine
from .protocol import ROLES, message_to_event


class HealthResponse(BaseModel):
    status: str
    version: str
    tick: int
    tick_rate: float


class SceneResponse(BaseModel):
    scene: dict
    protocol_version: int
    snapshot_divisor: int


class EngineLoop:
    """Paces engine ticks against the wall clock on a daemon thread."""

    def __init__(self, engine: Engine):
        self.engine = engine
        self._stop = threading.Event()
        self._thread: threading.Thread | None = None

    def start(self) -> None:
        if self._thread is not None:
            return
        self._thread = threading.Thread(target=self._run, daemon=True,
                                        name="camshare-engine")
        self._thread.start()

    def stop(self) -> None:
        self._stop.set()
        if self._thread is not None:
            self._thread.join(timeout=2.0)
            self._thread = None

    def _run(self) -> None:
        dt = self.engine.dt
        next_tick = time.perf_counter()
        while not self._stop.is_set():
            self.engine.tick()
            next_tick += dt
            delay = next_tick - time.perf_counter()
            if delay > 0:
                self._stop.wait(delay)
            else:
                next_tick = time.perf_counter()    # fell behind; don't spiral


class Broadcaster:
    """Fans engine snapshots out to per-client asyncio queues."""

    def __init__(self, engine: Engine, divisor: int):
        self.divisor = max(1, divisor)
        self._count = 0
        self._clients: dict[WebSocket, tuple[asyncio.Queue, asyncio.AbstractEventLoop]] = {}
        self._lock = threading.Lock()
        engine.add_listener(self._on_snapshot)

    def _on_snapshot(self, payload: str) -> None:
        self._count += 1
        if self._count % self.divisor:
            return
        message = '{"type":"snapshot","data":' + payload + "}"
        with self._lock:
            clients = list(self._clients.items())
        for _, (queue, loop) in clients:
            loop.call_soon_threadsafe(_queue_put_drop_oldest, queue, message)

    def register(self, ws: WebSocket) -> asyncio.Queue:
        queue: asyncio.Queue = asyncio.Queue(maxsize=8)
        with self._lock:
            self._clients[ws] = (queue, asyncio.get_running_loop())
        return queue

    def unregister(self, ws: WebSocket) -> None:
        with self._lock:
            self._clients.pop(ws, None)

    def relay(self, sender: WebSocket, message: str) -> None:
        with self._lock:
            clients = [(w, q, l) for w, (q, l) in self._clients.items() if w is not sender]
        for _, queue, loop in clients:
            loop.call_soon_threadsafe(_queue_put_drop_oldest, queue, message)


def _queue_put_drop_oldest(queue: asyncio.Queue, item: str) -> None:
    while True:
        try:
            queue.put_nowait(item)
            return
        except asyncio.QueueFull:
            try:
                queue.get_nowait()
            except asyncio.QueueEmpty:
                pass


def create_app(engine: Engine, run_loop: bool = True) -> FastAPI:
    from contextlib import asynccontextmanager

    loop_runner = EngineLoop(engine)

    @asynccontextmanager
    async def lifespan(_app: FastAPI):
        if run_loop:
            loop_runner.start()
        yield
        loop_runner.stop()

    app = FastAPI(title="camshare session service", version=__version__,
                  lifespan=lifespan)
    broadcaster = Broadcaster(engine, engine.config.session.snapshot_divisor)
    app.state.engine = engine
    app.state.broadcaster = broadcaster

    @app.get("/health", response_model=HealthResponse)
    def health():
        return HealthResponse(status="ok", version=__version__,
                              tick=engine.tick_index,
                              tick_rate=engine.config.session.tick_rate)

    @app.get("/scene", response_model=SceneResponse)
    def scene():
        from .protocol import PROTOCOL_VERSION
        return SceneResponse(scene=engine.scene.source,
                             protocol_version=PROTOCOL_VERSION,
                             snapshot_divisor=engine.config.session.snapshot_divisor)

    @app.get("/state")
    def state():
        return engine.last_snapshot or {}

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket, role: str = Query(...)):
        if role not in ROLES:
            await ws.close(code=4000, reason=f"unknown role '{role}'")
            return
        await ws.accept()
        queue = broadcaster.register(ws)

        async def sender():
            while True:
                await ws.send_text(await queue.get())

        send_task = asyncio.create_task(sender())
        try:
            while True:
                raw = await ws.receive_text()
                now = engine.tick_index * engine.dt
                event, err = message_to_event(role, raw, now, engine)
                if err is not None:
                    await ws.send_text(json.dumps(
                        {"type": "error", "message": err}))
                    continue
                if event is not None:
                    engine.submit_event(event)
                    if event.kind == "annotation":
                        broadcaster.relay(ws, json.dumps(
                            {"type": "annotation", "from": role,
                             "data": {"shape": event.data["shape"],
                                      "points": event.data["points"]}}))
                    await ws.send_text(json.dumps({"type": "ack",
                                                   "kind": event.kind}))
        except WebSocketDisconnect:
            pass
        finally:
            send_task.cancel()
            broadcaster.unregister(ws)

    return app
