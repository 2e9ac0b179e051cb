"""Live session server: frames over WebSocket at 30 Hz, OSC alongside.

One asyncio task owns the simulation tick. Connection handlers never
touch the grid; they queue (rod, value) commands that the next tick
drains with last-writer-wins semantics, exactly like fingers landing on
the physical surface between scans. A small UDP endpoint answers ping
packets so a latency probe can measure the running session.
"""
from __future__ import annotations

import asyncio
import json
import logging
import socket
from collections import deque
from contextlib import asynccontextmanager

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .framing import N_RODS
from .osc import DEFAULT_OSC_PORT, OscDecodeError, decode_osc_ping, encode_osc_frame
from .pipeline import ENGINE_MODES, SessionConfig, parse_destination
from .surface import FRAME_PERIOD_MS, FULL_SCALE, RodGrid, snapshot

log = logging.getLogger("rodmatrix.server")


class _PingEcho(asyncio.DatagramProtocol):
    """Echoes well-formed ping packets straight back to the sender."""

    def __init__(self) -> None:
        self.transport: asyncio.DatagramTransport | None = None

    def connection_made(self, transport) -> None:
        self.transport = transport

    def datagram_received(self, data: bytes, addr) -> None:
        try:
            decode_osc_ping(data)
        except OscDecodeError:
            return
        self.transport.sendto(data, addr)


class LiveSession:
    """The single tick owner behind a serve endpoint."""

    def __init__(self, config: SessionConfig):
        self.config = config
        self.mode = config.mode
        self.grid = RodGrid()
        self.seq = 0
        self.clients: set[WebSocket] = set()
        self.commands: deque[tuple[int, int]] = deque()
        self.broadcast_times: deque[float] = deque(maxlen=4096)
        self.osc_packets = 0
        self.osc_bound_port: int | None = None
        self._task: asyncio.Task | None = None
        self._ping_transport = None
        self._osc_sock: socket.socket | None = None
        self._osc_dest: tuple[str, int] | None = None

    async def start(self) -> None:
        loop = asyncio.get_running_loop()
        if self.config.osc_destination:
            self._osc_dest = parse_destination(self.config.osc_destination)
            self._osc_sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        listen_port = self.config.osc_listen_port
        if listen_port is None:
            listen_port = DEFAULT_OSC_PORT
        self._ping_transport, _ = await loop.create_datagram_endpoint(
            _PingEcho, local_addr=("0.0.0.0", listen_port)
        )
        self.osc_bound_port = self._ping_transport.get_extra_info("sockname")[1]
        self._task = asyncio.create_task(self._tick_loop())
        log.info("session started: mode=%s ping_port=%d", self.mode, self.osc_bound_port)

    async def stop(self) -> None:
        if self._task is not None:
            self._task.cancel()
            try:
                await self._task
            except asyncio.CancelledError:
                pass
            self._task = None
        if self._ping_transport is not None:
            self._ping_transport.close()
            self._ping_transport = None
        if self._osc_sock is not None:
            self._osc_sock.close()
            self._osc_sock = None

    def queue_set(self, index: int, value: int) -> None:
        self.commands.append((index, value))

    def _drain_targets(self) -> dict[int, float]:
        targets: dict[int, float] = {}
        while self.commands:
            index, value = self.commands.popleft()
            targets[index] = float(value)  # last writer wins
        return targets

    async def _broadcast(self, payload: str) -> None:
        dead = []
        for ws in list(self.clients):
            try:
                await ws.send_text(payload)
            except Exception:
                dead.append(ws)
        for ws in dead:
            self.clients.discard(ws)

    async def broadcast_json(self, message: dict) -> None:
        await self._broadcast(json.dumps(message))

    async def _tick_once(self) -> None:
        self.grid.advance(self._drain_targets())
        frame = snapshot(self.grid, self.seq)
        self.seq += 1
        if self._osc_sock is not None:
            try:
                self._osc_sock.sendto(encode_osc_frame(frame), self._osc_dest)
                self.osc_packets += 1
            except OSError:
                log.warning("OSC emit to %s failed", self._osc_dest)
        await self.broadcast_json(
            {"type": "frame", "seq": frame.seq, "positions": list(frame.positions)}
        )
        self.broadcast_times.append(asyncio.get_running_loop().time())

    async def _tick_loop(self) -> None:
        loop = asyncio.get_running_loop()
        period = FRAME_PERIOD_MS / 1000.0
        next_t = loop.time() + period
        while True:
            await asyncio.sleep(max(0.0, next_t - loop.time()))
            next_t += period
            now = loop.time()
            if next_t < now:
                # Fell a whole tick behind: drop the lost ticks rather
                # than bursting frames to catch up.
                next_t = now + period
            await self._tick_once()


def _parse_update(obj, where: str) -> tuple[int, int]:
    if not isinstance(obj, dict):
        raise ValueError(f"{where} must be an object")
    extra = set(obj) - {"index", "value"}
    if extra:
        raise ValueError(f"{where} has unknown fields {sorted(extra)}")
    index = obj.get("index")
    value = obj.get("value")
    if not isinstance(index, int) or isinstance(index, bool) or not 0 <= index < N_RODS:
        raise ValueError(f"{where}.index must be an integer in [0,143]")
    if not isinstance(value, int) or isinstance(value, bool) or not 0 <= value <= FULL_SCALE:
        raise ValueError(f"{where}.value must be an integer in [0,127]")
    return index, value


def parse_client_message(raw: str, config: SessionConfig) -> tuple[str, object]:
    """Classify one inbound WebSocket message.

    Returns ("set", [(index, value), ...]), ("mode", name) or
    ("error", reason); the session never dies on bad input.
    """
    try:
        msg = json.loads(raw)
    except json.JSONDecodeError:
        return ("error", "malformed json")
    if not isinstance(msg, dict) or not isinstance(msg.get("type"), str):
        return ("error", "message must be an object with a type")
    kind = msg["type"]
    try:
        if kind == "set":
            return ("set", [_parse_set(msg)])
        if kind == "sculpt":
            extra = set(msg) - {"type", "updates"}
            if extra:
                raise ValueError(f"sculpt has unknown fields {sorted(extra)}")
            updates = msg.get("updates")
            if not isinstance(updates, list) or not updates:
                raise ValueError("sculpt.updates must be a non-empty list")
            return ("set", [_parse_update(u, f"updates[{i}]") for i, u in enumerate(updates)])
        if kind == "mode":
            extra = set(msg) - {"type", "name"}
            if extra:
                raise ValueError(f"mode has unknown fields {sorted(extra)}")
            name = msg.get("name")
            if name not in ENGINE_MODES:
                raise ValueError(f"unknown mode {name!r}")
            if name == "granular" and not config.source_wav:
                raise ValueError("granular mode needs source_wav in the session config")
            return ("mode", name)
        raise ValueError(f"unknown message type {kind!r}")
    except ValueError as exc:
        return ("error", str(exc))


def _parse_set(msg: dict) -> tuple[int, int]:
    payload = {k: v for k, v in msg.items() if k != "type"}
    return _parse_update(payload, "set")


def create_app(config: SessionConfig) -> FastAPI:
    """Build the serve application; the session starts with the app."""
    session = LiveSession(config)

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        await session.start()
        try:
            yield
        finally:
            await session.stop()

    app = FastAPI(lifespan=lifespan)
    app.state.session = session

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket) -> None:
        await ws.accept()
        session.clients.add(ws)
        # Announce the current mode so a fresh client can sync its UI.
        await ws.send_text(json.dumps({"type": "mode", "name": session.mode}))
        try:
            while True:
                raw = await ws.receive_text()
                kind, payload = parse_client_message(raw, session.config)
                if kind == "error":
                    await ws.send_text(json.dumps({"type": "error", "reason": payload}))
                elif kind == "set":
                    for index, value in payload:
                        session.queue_set(index, value)
                else:
                    session.mode = payload
                    await session.broadcast_json({"type": "mode", "name": payload})
        except WebSocketDisconnect:
            pass
        finally:
            session.clients.discard(ws)

    return app


def serve(config: SessionConfig, host: str = "127.0.0.1") -> None:
    """Blocking entry point used by the CLI."""
    import uvicorn

    uvicorn.run(create_app(config), host=host, port=config.serve_port, log_level="warning")
