"""Session host: websocket endpoint, turn-state broadcasting, static UI files.

One server process hosts one session at a time.  Clients connect to /ws,
introduce themselves with a hello message, and then exchange protocol
frames (see duet.protocol).  All session mutations happen in the event
loop; partner generation runs in a worker thread and its result is joined
back through the loop.
"""

from __future__ import annotations

import asyncio
import os
import time
from contextlib import asynccontextmanager
from pathlib import Path

import numpy as np
from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.staticfiles import StaticFiles

from .analysis import RatingForm, validate_form
from .protocol import (ProtocolError, SequenceCounter, WireMessage,
                       decode_message, encode_message)
from .session import (PartnerInputReady, Session, SessionConfig, SessionEnded,
                      WallClock, persist_log)

BROADCAST_HZ = 10.0


class ClientConnection:
    def __init__(self, ws: WebSocket, role: str):
        self.ws = ws
        self.role = role  # 'player-a' | 'player-b' | 'viewer'
        self.seq = SequenceCounter()

    async def send(self, mtype: str, payload: dict) -> None:
        msg = WireMessage(type=mtype, seq=self.seq.next(), payload=payload)
        await self.ws.send_text(encode_message(msg))


class SessionHost:
    def __init__(self, config: SessionConfig, responder=None, log_dir=None):
        self.config = config
        self.responder = responder
        self.log_dir = log_dir or os.environ.get("DUET_LOG_DIR")
        self.clock = WallClock()
        self.session: Session | None = None
        self.clients: list[ClientConnection] = []
        self._rng = np.random.Generator(np.random.Philox(key=config.seed))
        self._ticker: asyncio.Task | None = None
        self._log_written = False

    @property
    def needed_players(self) -> int:
        return 2 if self.config.partner.kind == "human-relay" else 1

    def assign_role(self, requested: str | None) -> str:
        taken = {c.role for c in self.clients}
        if requested == "viewer":
            return "viewer"
        if "player-a" not in taken:
            return "player-a"
        if self.needed_players == 2 and "player-b" not in taken:
            return "player-b"
        return "viewer"

    async def broadcast(self, mtype: str, payload: dict) -> None:
        for client in list(self.clients):
            try:
                await client.send(mtype, payload)
            except Exception:
                pass

    def maybe_start(self) -> None:
        players = sum(1 for c in self.clients if c.role.startswith("player"))
        if self.session is None and players >= self.needed_players:
            self.session = Session(self.config, clock=self.clock)
            self.session.start()
            self._ticker = asyncio.get_running_loop().create_task(self._tick_loop())

    async def _tick_loop(self) -> None:
        try:
            while True:
                await self._tick()
                await asyncio.sleep(1.0 / BROADCAST_HZ)
        except asyncio.CancelledError:
            pass

    async def _tick(self) -> None:
        session = self.session
        if session is None or not session.running:
            return
        for action in session.advance():
            if isinstance(action, PartnerInputReady):
                asyncio.get_running_loop().create_task(
                    self._generate(action.turn_index, action.input_tokens))
            elif isinstance(action, SessionEnded):
                self._write_log()
        if session.turns and session.running:
            turn = session.turns[-1]
            now = self.clock.now_ms()
            span = turn.end_ms - turn.start_ms
            frac = max(0.0, min(1.0, 1.0 - (now - turn.start_ms) / span))
            await self.broadcast("turn_state", {
                "index": turn.index, "role": turn.role,
                "ends_at_ms": turn.end_ms, "progress_fraction": frac})

    async def _generate(self, turn_index: int, input_tokens) -> None:
        t0 = self.clock.now_ms()
        melody = await asyncio.to_thread(self.responder, input_tokens, self._rng)
        compute_ms = self.clock.now_ms() - t0
        session = self.session
        if session is None:
            return
        try:
            session.deliver_response(turn_index, melody, compute_ms)
        except Exception:
            return
        turn = session.turns[turn_index]
        await self.broadcast("partner_melody", {
            "tokens": list(melody.codes),
            "tempo_bpm": self.config.tempo_bpm,
            "start_at_ms": turn.start_ms})

    def _write_log(self) -> None:
        if self._log_written or self.session is None:
            return
        self._log_written = True
        if self.log_dir:
            directory = Path(self.log_dir)
            directory.mkdir(parents=True, exist_ok=True)
            stamp = time.strftime("%Y%m%d-%H%M%S")
            persist_log(self.session.log(), directory / f"session-{stamp}.duetlog")

    async def handle_message(self, client: ClientConnection, frame: str) -> None:
        try:
            msg = decode_message(frame)
        except ProtocolError as exc:
            await client.send("error", {"code": exc.code, "message": exc.message})
            raise
        if not client.seq.check_incoming(msg.seq):
            await client.send("error", {"code": "bad-seq",
                                        "message": "sequence number not increasing"})
            return
        if msg.type in ("note_on", "note_off"):
            if self.session is None:
                return
            source = "B" if client.role == "player-b" else "A"
            kind = "on" if msg.type == "note_on" else "off"
            self.session.capture_event(
                int(msg.payload.get("pitch", -1)),
                int(msg.payload.get("velocity", -1)),
                kind, float(msg.payload.get("t_ms", self.clock.now_ms())),
                source=source)
        elif msg.type == "rating_submit":
            form_dict = dict(msg.payload.get("form") or {})
            try:
                form_dict["sfss_items"] = tuple(form_dict.get("sfss_items", ()))
                form = RatingForm(**form_dict)
            except TypeError:
                await client.send("error", {"code": "bad-form",
                                            "message": "malformed rating form"})
                return
            violations = validate_form(form)
            if violations:
                await client.send("error", {"code": "bad-form",
                                            "message": "; ".join(violations)})
                return
            if self.session is not None:
                self.session.submit_ratings(form)
                self._write_log()
            await client.send("ack", {"of": msg.seq})
        elif msg.type == "hello":
            await client.send("ack", {"of": msg.seq})
        else:
            await client.send("error", {"code": "bad-type",
                                        "message": f"unexpected {msg.type}"})

    def shutdown(self) -> None:
        if self._ticker is not None:
            self._ticker.cancel()


def create_app(config: SessionConfig, responder=None, static_dir=None,
               log_dir=None) -> FastAPI:
    host = SessionHost(config, responder=responder, log_dir=log_dir)

    @asynccontextmanager
    async def lifespan(_app: FastAPI):
        yield
        host.shutdown()

    app = FastAPI(lifespan=lifespan)
    app.state.host = host

    @app.websocket("/ws")
    async def websocket_endpoint(ws: WebSocket):
        await ws.accept()
        client: ClientConnection | None = None
        try:
            first = decode_message(await ws.receive_text())
            if first.type != "hello":
                raise ProtocolError("bad-type", "first message must be hello")
            role = host.assign_role(first.payload.get("role"))
            client = ClientConnection(ws, role)
            client.seq.check_incoming(first.seq)
            host.clients.append(client)
            await client.send("config", {"config": {
                "role": role,
                "turn_seconds": config.turn_seconds,
                "cycles": config.cycles,
                "tempo_bpm": config.tempo_bpm,
                "partner": config.partner.kind,
                "bars": config.partner.bars,
            }})
            host.maybe_start()
            while True:
                frame = await ws.receive_text()
                await host.handle_message(client, frame)
        except (WebSocketDisconnect, ProtocolError):
            pass
        finally:
            if client is not None and client in host.clients:
                host.clients.remove(client)

    if static_dir:
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")
    else:
        @app.get("/")
        def index():
            return {"service": "duet", "protocol": "duet/1"}

    return app
