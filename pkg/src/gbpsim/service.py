"""Live SLAM session behind a WebSocket: steering in, snapshot frames out.

One process hosts one simulation. A single owner coroutine runs the loop:
drain queued commands (applying each and acking its sender), advance GBP by
one step unless paused, and broadcast a snapshot frame at most frame_rate
times per second. Clients never touch the graph; the network handlers only
enqueue commands, so command application and stepping are strictly
serialized.

Fan-out never blocks the loop: every client holds a small control queue for
its acks and errors plus a single newest-wins snapshot slot, so a slow
reader just skips intermediate frames.
"""

from __future__ import annotations

import argparse
import asyncio
import contextlib
import json
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, Optional, Set

import numpy as np
import uvicorn
from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.responses import PlainTextResponse

from .batch import BatchSolution, compare, solve, solve_robust
from .errors import GbpError, InvalidCommand
from .graph import FactorGraph
from .messages import DampingConfig
from .scenarios import (
    SlamConfig,
    WorldState,
    classify_factors,
    new_world,
    scale_measurement_precision,
    set_robust,
    world_step,
)
from .schedules import ScheduleKind, floodfill_sweep, random_step, sync_step
from .snapshots import build_snapshot

COMMAND_QUEUE_LIMIT = 256
CTRL_QUEUE_LIMIT = 64


@dataclass
class ServeConfig:
    seed: int = 0
    frame_rate: float = 30.0
    robust: bool = False
    damping: float = 0.0


class Client:
    """Per-connection outbox: ordered acks/errors plus one snapshot slot."""

    def __init__(self):
        self.ctrl: deque = deque(maxlen=CTRL_QUEUE_LIMIT)
        self.snapshot: Optional[dict] = None
        self.wake = asyncio.Event()

    def offer_ctrl(self, msg: dict):
        self.ctrl.append(msg)
        self.wake.set()

    def offer_snapshot(self, msg: dict):
        # newest wins: an unsent frame is simply replaced
        self.snapshot = msg
        self.wake.set()

    async def drain(self):
        await self.wake.wait()
        self.wake.clear()
        out = list(self.ctrl)
        self.ctrl.clear()
        if self.snapshot is not None:
            out.append(self.snapshot)
            self.snapshot = None
        return out


@dataclass
class Session:
    config: ServeConfig
    world: WorldState
    graph: FactorGraph
    schedule: ScheduleKind = ScheduleKind.SYNC
    rng: np.random.Generator = field(default_factory=np.random.default_rng)
    damping: Optional[DampingConfig] = None
    paused: bool = False
    messages_total: int = 0
    overlay_requested: bool = False
    clients: Set[Client] = field(default_factory=set)
    commands: Optional[asyncio.Queue] = None
    # broadcast bookkeeping
    last_frame_time: float = 0.0
    last_frame_iteration: int = -1
    last_frame_version: int = -1
    _batch_cache_version: int = -1
    _batch_cache: Optional[BatchSolution] = None

    def batch_solution(self) -> BatchSolution:
        """Dense solve of the current graph, cached until the graph changes."""
        if self._batch_cache_version != self.graph.version:
            if self.world.kernels_on:
                self._batch_cache = solve_robust(self.graph)
            else:
                self._batch_cache = solve(self.graph)
            self._batch_cache_version = self.graph.version
        return self._batch_cache


def new_session(config: ServeConfig) -> Session:
    world, graph = new_world(SlamConfig(seed=config.seed, robust=config.robust))
    damping = DampingConfig(config.damping) if config.damping > 0 else None
    return Session(
        config=config,
        world=world,
        graph=graph,
        rng=np.random.default_rng(config.seed),
        damping=damping,
        commands=asyncio.Queue(maxsize=COMMAND_QUEUE_LIMIT),
    )


def apply_command(session: Session, cmd: dict) -> dict:
    """Apply one client command to the session; returns the echo for the ack.

    Raises InvalidCommand (or a scenario error) on anything malformed; the
    caller turns that into an error frame.
    """
    if not isinstance(cmd, dict) or "type" not in cmd:
        raise InvalidCommand("command must be an object with a 'type' field")
    kind = cmd["type"]
    if kind == "move":
        direction = cmd.get("dir")
        world_step(session.world, session.graph, direction)
        return {"type": "move", "dir": direction}
    if kind == "set_robust":
        on = cmd.get("on")
        if not isinstance(on, bool):
            raise InvalidCommand("set_robust needs a boolean 'on'")
        set_robust(session.world, session.graph, on)
        return {"type": "set_robust", "on": on}
    if kind == "scale_precision":
        multiplier = cmd.get("multiplier")
        if not isinstance(multiplier, (int, float)) or not multiplier > 0:
            raise InvalidCommand("scale_precision needs a positive 'multiplier'")
        scale_measurement_precision(session.graph, float(multiplier))
        return {"type": "scale_precision", "multiplier": float(multiplier)}
    if kind == "set_schedule":
        try:
            session.schedule = ScheduleKind(cmd.get("kind"))
        except ValueError:
            raise InvalidCommand(f"unknown schedule kind {cmd.get('kind')!r}") from None
        return {"type": "set_schedule", "kind": session.schedule.value}
    if kind == "pause":
        session.paused = True
        return {"type": "pause"}
    if kind == "resume":
        session.paused = False
        return {"type": "resume"}
    if kind == "request_batch_overlay":
        session.overlay_requested = True
        return {"type": "request_batch_overlay"}
    raise InvalidCommand(f"unknown command type {kind!r}")


def build_frame(session: Session) -> dict:
    """Snapshot frame of the current state, with overlay when requested."""
    batch = None
    mean_err = None
    census = None
    if session.overlay_requested:
        batch = session.batch_solution()
        metrics = compare(session.graph, batch)
        mean_err = metrics.max_mean_err
        census = metrics.overconfident_fraction
        session.overlay_requested = False
    doc = build_snapshot(
        session.graph,
        session.config.seed,
        messages_sent=session.messages_total,
        gt=session.world.var_gt,
        classes=classify_factors(session.world, session.graph),
        batch=batch,
        mean_err_vs_batch=mean_err,
        cov_ratio_census=census,
    )
    doc["type"] = "snapshot"
    return doc


def _broadcast(session: Session, msg: dict):
    for client in session.clients:
        client.offer_snapshot(msg)


def _step_once(session: Session):
    if session.schedule == ScheduleKind.RANDOM:
        session.messages_total += random_step(session.graph, session.rng, session.damping)
    elif session.schedule == ScheduleKind.FLOODFILL:
        session.messages_total += floodfill_sweep(session.graph, session.damping)
    else:
        session.messages_total += sync_step(session.graph, session.damping)


async def step_loop(session: Session):
    """The single owner of the graph: commands, stepping, frame pacing."""
    # configurable pacing, hard-capped at 30 frames per second
    min_interval = 1.0 / max(min(session.config.frame_rate, 30.0), 1e-3)
    while True:
        busy = False
        while True:
            try:
                client, cmd = session.commands.get_nowait()
            except asyncio.QueueEmpty:
                break
            busy = True
            try:
                echo = apply_command(session, cmd)
                client.offer_ctrl(
                    {"type": "ack", "cmd": echo, "iteration": session.graph.iteration}
                )
            except (InvalidCommand, GbpError, ValueError) as exc:
                client.offer_ctrl({"type": "error", "detail": str(exc)})

        if not session.paused:
            try:
                _step_once(session)
                busy = True
            except GbpError as exc:
                # a bad configuration (say, floodfill on a loopy graph) must
                # not kill the session: report it and hold until commanded
                session.paused = True
                for client in session.clients:
                    client.offer_ctrl({"type": "error", "detail": str(exc)})

        now = time.perf_counter()
        changed = (
            session.graph.iteration != session.last_frame_iteration
            or session.graph.version != session.last_frame_version
            or session.overlay_requested
        )
        if changed and now - session.last_frame_time >= min_interval:
            _broadcast(session, build_frame(session))
            session.last_frame_time = now
            session.last_frame_iteration = session.graph.iteration
            session.last_frame_version = session.graph.version

        await asyncio.sleep(0 if busy else 0.005)


def create_app(config: Optional[ServeConfig] = None) -> FastAPI:
    config = config or ServeConfig()

    @contextlib.asynccontextmanager
    async def lifespan(app: FastAPI):
        session = new_session(config)
        app.state.session = session
        task = asyncio.create_task(step_loop(session))
        try:
            yield
        finally:
            task.cancel()
            with contextlib.suppress(asyncio.CancelledError):
                await task

    app = FastAPI(lifespan=lifespan)

    @app.get("/healthz", response_class=PlainTextResponse)
    async def healthz():
        return "ok"

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket):
        await ws.accept()
        session: Session = app.state.session
        client = Client()
        session.clients.add(client)
        # a fresh connection starts from a full picture of the world
        client.offer_snapshot(build_frame(session))

        async def sender():
            while True:
                for msg in await client.drain():
                    await ws.send_text(json.dumps(msg))

        send_task = asyncio.create_task(sender())
        try:
            while True:
                raw = await ws.receive_text()
                try:
                    cmd = json.loads(raw)
                except json.JSONDecodeError:
                    client.offer_ctrl(
                        {"type": "error", "detail": "frame is not valid JSON"}
                    )
                    continue
                try:
                    session.commands.put_nowait((client, cmd))
                except asyncio.QueueFull:
                    client.offer_ctrl(
                        {"type": "error", "detail": "command queue is full"}
                    )
        except WebSocketDisconnect:
            pass
        finally:
            send_task.cancel()
            with contextlib.suppress(asyncio.CancelledError):
                await send_task
            session.clients.discard(client)

    return app


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="gbpsim-serve", description="live GBP SLAM session over WebSocket"
    )
    parser.add_argument("--bind", default="127.0.0.1:8765", help="host:port")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--frame-rate", type=float, default=30.0)
    parser.add_argument("--robust", action="store_true")
    args = parser.parse_args(argv)

    host, _, port = args.bind.rpartition(":")
    if not host or not port.isdigit():
        print(f"gbpsim-serve: error: bad --bind {args.bind!r}", flush=True)
        return 1
    app = create_app(
        ServeConfig(seed=args.seed, frame_rate=args.frame_rate, robust=args.robust)
    )
    uvicorn.run(app, host=host, port=int(port), log_level="warning")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
