"""Ingestion service: HTTP batch ingest + queries, and live play over WebSocket.

The HTTP surface speaks the newline-delimited frame format on ingest and JSON
on queries. The WebSocket endpoint hosts a live game per session: connected
clients send grasp press/release inputs stamped with their own monotonic
clock, the engine runs on that clock, and every effect is pushed to all
clients of the session. Grasp inputs are also persisted to the event store as
device-level frames, so a live play session can be analyzed like any other.

Authentication is a single static bearer token taken from POCKETSIM_TOKEN
(HTTP header, or ?token= on the WebSocket); with no token set the API is open.
"""

from __future__ import annotations

import asyncio
import os
import time
from dataclasses import dataclass, field

from fastapi import Depends, FastAPI, HTTPException, Query, Request, WebSocket
from fastapi.responses import JSONResponse
from starlette.websockets import WebSocketDisconnect

from .game import (
    EffectKind,
    GameConfig,
    GameEvent,
    GameState,
    Mode,
    Phase,
    ProtocolError,
    derive_seed,
    next_wake_ms,
    step,
)
from .store import EventStore, UnknownSessionError
from .wire import DEVICE_LEVEL, DecodeError, NotificationFrame, decode_frames

TOKEN_ENV = "POCKETSIM_TOKEN"
# Engine ticks trail the estimated client clock so that a client-stamped
# input never arrives "in the past" and press durations stay exact.
TICK_LAG_MS = 250


def _now_ms() -> int:
    return int(time.time() * 1000)


@dataclass
class LiveGame:
    session_id: str
    seed: int
    config: GameConfig = field(default_factory=GameConfig)
    state: GameState = field(default_factory=GameState)
    sockets: list[WebSocket] = field(default_factory=list)
    seq: int = 0
    last_client_ts: int = 0
    last_wall_ms: int = 0
    lock: asyncio.Lock = field(default_factory=asyncio.Lock)

    def snapshot(self) -> dict:
        s = self.state
        return {
            "phase": s.phase.value,
            "mode": s.mode.value,
            "stars": [star.value for star in s.stars],
            "face": "smiling" if s.phase is Phase.SUCCESS_BUZZ else "neutral",
            "pattern_no": s.pattern_no,
            "attempts": s.attempts_this_pattern,
            "patterns_completed": s.patterns_completed,
            "next_note": s.next_note,
            "grasped": s.grasped,
            "clock_ms": s.clock_ms,
        }


def create_app(store: EventStore, token: str | None = None,
               ui_dir: str | None = None, live_seed: int | None = None,
               tick_interval: float | None = 0.1) -> FastAPI:
    app = FastAPI(title="pocketsim server")
    games: dict[str, LiveGame] = {}
    if token is None:
        token = os.environ.get(TOKEN_ENV) or None
    base_seed = live_seed if live_seed is not None else int.from_bytes(os.urandom(4), "big")

    def require_auth(request: Request) -> None:
        if token is None:
            return
        header = request.headers.get("authorization", "")
        if header != f"Bearer {token}":
            raise HTTPException(status_code=401, detail="missing or bad token")

    # ------------------------------------------------------------- http api

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.post("/api/v1/sessions", status_code=201)
    async def create_session(request: Request, _=Depends(require_auth)):
        body = {}
        raw = await request.body()
        if raw:
            import json
            try:
                body = json.loads(raw)
            except ValueError:
                raise HTTPException(status_code=400, detail="body must be json")
        session_id = body.get("session_id") or f"session-{_now_ms()}-{len(store.list_sessions())}"
        store.create_session(session_id, meta=body.get("meta") or {})
        return {"session_id": session_id}

    @app.post("/api/v1/sessions/{session_id}/events")
    async def ingest_events(session_id: str, request: Request,
                            _=Depends(require_auth)):
        raw = await request.body()
        try:
            frames = decode_frames(raw)
        except DecodeError as e:
            return JSONResponse(status_code=400,
                                content={"error": str(e), "offset": e.offset})
        try:
            acks = store.ingest(session_id, frames, _now_ms())
        except UnknownSessionError:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id}")
        return {"acks": acks, "count": len(frames)}

    @app.get("/api/v1/sessions/{session_id}/events")
    def query_events(session_id: str,
                     from_ms: int | None = Query(default=None, alias="from"),
                     to_ms: int | None = Query(default=None, alias="to"),
                     device: str | None = None,
                     kind: str | None = None,
                     _=Depends(require_auth)):
        try:
            records = store.query_events(session_id, from_ms, to_ms, device, kind)
        except UnknownSessionError:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id}")
        return {"events": [vars(r) for r in records]}

    # ------------------------------------------------------------- live play

    async def broadcast(game: LiveGame, message: dict) -> None:
        dead = []
        for ws in game.sockets:
            try:
                await ws.send_json(message)
            except Exception:
                dead.append(ws)
        for ws in dead:
            if ws in game.sockets:
                game.sockets.remove(ws)

    async def advance(game: LiveGame, event: GameEvent, now: int) -> None:
        """Feed one event to the engine and fan out its consequences."""
        now = max(now, game.state.clock_ms)
        game.state, effects = step(game.state, event, now, game.config, game.seed)
        for e in effects:
            await broadcast(game, {
                "type": "effect", "kind": e.kind.value, "at_ms": e.at_ms,
                "payload": e.payload, "mode": e.mode.value,
            })

    async def handle_grasp(game: LiveGame, kind: str, ts: int) -> None:
        event = GameEvent.GRASP_PRESS if kind == "press" else GameEvent.GRASP_RELEASE
        try:
            await advance(game, event, ts)
        except ProtocolError as e:
            await broadcast(game, {"type": "error", "error": str(e)})
            return
        game.seq += 1
        frame = NotificationFrame(
            game.seq, f"ui:{game.session_id}", ts, DEVICE_LEVEL,
            "touch" if kind == "press" else "release")
        store.ingest(game.session_id, [frame], _now_ms())
        await broadcast(game, {"type": "grasp_event", "kind": kind, "ts_ms": ts})

    async def tick_estimated(game: LiveGame) -> None:
        """Advance the engine on the estimated (lagged) client clock."""
        if game.last_wall_ms == 0:
            return
        estimate = game.last_client_ts + (_now_ms() - game.last_wall_ms) - TICK_LAG_MS
        if estimate > game.state.clock_ms and next_wake_ms(game.state, game.config) is not None:
            await advance(game, GameEvent.TIMER_TICK, estimate)

    async def tick_loop(game: LiveGame) -> None:
        while game.sockets:
            await asyncio.sleep(tick_interval)
            async with game.lock:
                await tick_estimated(game)

    @app.websocket("/api/v1/live/{session_id}")
    async def live(ws: WebSocket, session_id: str):
        if token is not None and ws.query_params.get("token") != token:
            await ws.close(code=4401)
            return
        await ws.accept()
        store.create_session(session_id, meta={"live": True})
        game = games.get(session_id)
        if game is None:
            game = LiveGame(session_id, derive_seed(base_seed, session_id))
            games[session_id] = game
        game.sockets.append(ws)
        if len(game.sockets) == 1 and tick_interval is not None:
            asyncio.ensure_future(tick_loop(game))
        await ws.send_json({"type": "hello", "session_id": session_id,
                            "state": game.snapshot()})
        try:
            while True:
                msg = await ws.receive_json()
                kind = msg.get("type")
                async with game.lock:
                    if kind == "grasp":
                        ts = int(msg["ts_ms"])
                        game.last_client_ts = ts
                        game.last_wall_ms = _now_ms()
                        await handle_grasp(game, msg.get("kind", ""), ts)
                    elif kind == "tick":
                        await advance(game, GameEvent.TIMER_TICK, int(msg["ts_ms"]))
                    elif kind == "mode":
                        game.state.mode = Mode(msg.get("mode", "visual"))
                        await broadcast(game, {"type": "mode", "mode": game.state.mode.value})
                    elif kind == "state":
                        await ws.send_json({"type": "state", "state": game.snapshot()})
                    elif kind == "ping":
                        await ws.send_json({"type": "pong"})
                    else:
                        await ws.send_json({"type": "error",
                                            "error": f"unknown message type {kind!r}"})
        except WebSocketDisconnect:
            pass
        finally:
            if ws in game.sockets:
                game.sockets.remove(ws)

    # ------------------------------------------------------------ static ui

    if ui_dir and os.path.isdir(ui_dir):
        from fastapi.staticfiles import StaticFiles
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
