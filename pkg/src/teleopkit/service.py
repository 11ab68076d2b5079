"""Streaming retargeting service.

One solver session per websocket connection, sharing an immutable hand
model.  JSON messages over ``/ws``:

* client hello: ``{"type": "hello", "client": str, "version": str}``
  answered by ``{"type": "hello", "session_id", "model_descriptor",
  "defaults", "heartbeat_s"}``
* ``{"type": "pose_update", "seq": int, "frames": {name: {"p": [...],
  "q": [...]}}}`` answered by ``{"type": "joint_state", "seq", "q",
  "objective", "converged", "solve_micros", "residuals", "dropped"}``
  or ``{"type": "error", ...}`` (session state untouched on error)
* ``{"type": "set_params", "alpha"?, "human_scale"?, ...}`` answered by
  ``{"type": "ack", "params": {...}}`` or an error (no partial apply)
* server ``{"type": "heartbeat", "t"}`` every ``heartbeat_s`` seconds.

Backpressure: pose updates arriving while a solve is in flight are
coalesced to the freshest one; the number of skipped updates is reported
in the next joint_state's ``dropped`` field (stale teleoperation targets
are harmful, so intermediates are dropped, not queued).  Sessions silent
for ``reap_s`` seconds are closed.

HTTP: ``GET /model`` returns the model descriptor, ``GET /health`` the
service status.
"""
from __future__ import annotations

import asyncio
import itertools
import time
import uuid
from dataclasses import dataclass, field

import numpy as np
from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware
from starlette.websockets import WebSocket, WebSocketDisconnect

from .geometry import Pose
from .hand_model import TASK_FRAME_NAMES, HandModel, clamp_to_limits, default_hand_model, fk_task_frames
from .retarget import ORDERED_PAIRS, RetargetParams, retarget_step, task_space_vectors

PROTOCOL_VERSION = "1"

MODEL_DESCRIPTOR_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["dof", "root", "joints", "frames"],
    "additionalProperties": False,
    "properties": {
        "dof": {"type": "integer", "minimum": 0},
        "root": {"type": "string"},
        "joints": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "parent", "child", "origin", "axis", "limits"],
                "additionalProperties": False,
                "properties": {
                    "name": {"type": "string"},
                    "parent": {"type": "string"},
                    "child": {"type": "string"},
                    "origin": {"$ref": "#/$defs/pose"},
                    "axis": {"$ref": "#/$defs/vec3"},
                    "limits": {
                        "type": "array",
                        "items": {"type": "number"},
                        "minItems": 2,
                        "maxItems": 2,
                    },
                },
            },
        },
        "frames": {
            "type": "array",
            "minItems": 4,
            "maxItems": 4,
            "items": {
                "type": "object",
                "required": ["name", "link", "offset"],
                "additionalProperties": False,
                "properties": {
                    "name": {"type": "string"},
                    "link": {"type": "string"},
                    "offset": {"$ref": "#/$defs/pose"},
                },
            },
        },
    },
    "$defs": {
        "vec3": {"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 3},
        "quat": {"type": "array", "items": {"type": "number"}, "minItems": 4, "maxItems": 4},
        "pose": {
            "type": "object",
            "required": ["p", "q"],
            "additionalProperties": False,
            "properties": {"p": {"$ref": "#/$defs/vec3"}, "q": {"$ref": "#/$defs/quat"}},
        },
    },
}


class ProtocolError(ValueError):
    """Malformed or invalid client message; session state is unchanged."""


def serve_model_descriptor(model: HandModel) -> dict:
    """Joint names, limits, link tree and frame attachments for clients."""
    return {
        "dof": model.dof,
        "root": model.root_link,
        "joints": [
            {
                "name": j.name,
                "parent": j.parent_link,
                "child": j.child_link,
                "origin": {"p": list(j.origin.position), "q": list(j.origin.orientation)},
                "axis": list(j.axis),
                "limits": [j.limits[0], j.limits[1]],
            }
            for j in model.joints
        ],
        "frames": [
            {
                "name": name,
                "link": model.task_frames[name].link,
                "offset": {
                    "p": list(model.task_frames[name].offset.position),
                    "q": list(model.task_frames[name].offset.orientation),
                },
            }
            for name in TASK_FRAME_NAMES
        ],
    }


def _params_payload(params: RetargetParams) -> dict:
    return {
        "alpha": params.alpha,
        "human_scale": params.human_scale,
        "max_iters": params.max_iters,
        "grad_tol": params.grad_tol,
        "step_tol": params.step_tol,
        "fd_step": params.fd_step,
    }


_SETTABLE = frozenset(["alpha", "human_scale", "max_iters", "grad_tol", "step_tol", "fd_step"])


class TeleopSession:
    """Single-owner solver state: the per-connection Q(t') wrapper."""

    def __init__(self, model: HandModel, params: RetargetParams, session_id: str | None = None):
        self.session_id = session_id or uuid.uuid4().hex[:12]
        self.model = model
        self.params = params
        self.q_prev = clamp_to_limits(model, np.zeros(model.dof))
        self.created_at = time.time()
        self.last_update = self.created_at

    def _parse_frames(self, frames) -> dict[str, Pose]:
        if not isinstance(frames, dict) or set(frames) != set(TASK_FRAME_NAMES):
            raise ProtocolError(f"frames must be exactly {list(TASK_FRAME_NAMES)}")
        poses = {}
        for name in TASK_FRAME_NAMES:
            payload = frames[name]
            try:
                poses[name] = Pose(
                    np.asarray(payload["p"], dtype=float), np.asarray(payload["q"], dtype=float)
                )
            except (KeyError, TypeError, ValueError) as e:
                raise ProtocolError(f"frame {name!r}: {e}") from None
        return poses

    def pose_update(self, frames, seq: int, dropped: int = 0) -> dict:
        """Solve against the given frame poses and advance the warm start."""
        poses = self._parse_frames(frames)
        h = task_space_vectors(poses)
        start = time.perf_counter_ns()
        result = retarget_step(self.model, h, self.q_prev, self.params)
        micros = (time.perf_counter_ns() - start) // 1000
        self.q_prev = result.q
        self.last_update = time.time()
        pos = fk_task_frames(self.model, result.q)
        scale = self.params.human_scale
        residuals = [
            float(np.linalg.norm((pos[j - 1] - pos[i - 1]) - scale * h[i, j])) for i, j in ORDERED_PAIRS
        ]
        return {
            "type": "joint_state",
            "seq": seq,
            "q": [float(v) for v in result.q],
            "objective": result.objective,
            "converged": result.converged,
            "solve_micros": int(micros),
            "residuals": residuals,
            "dropped": dropped,
        }

    def set_params(self, updates: dict) -> dict:
        """Atomically apply parameter changes; invalid values leave all intact."""
        unknown = set(updates) - _SETTABLE
        if unknown:
            raise ProtocolError(f"unknown parameters {sorted(unknown)}")
        try:
            new_params = self.params.updated(**updates)
        except (ValueError, TypeError) as e:
            raise ProtocolError(str(e)) from None
        self.params = new_params
        self.last_update = time.time()
        return {"type": "ack", "params": _params_payload(self.params)}


class LatestSlot:
    """Drop-intermediate mailbox: holds only the freshest pose update."""

    def __init__(self):
        self._pending = None
        self._dropped = 0

    def push(self, msg) -> None:
        if self._pending is not None:
            self._dropped += 1
        self._pending = msg

    def pop(self):
        """Returns (message, dropped_count) or None when empty."""
        if self._pending is None:
            return None
        msg, dropped = self._pending, self._dropped
        self._pending = None
        self._dropped = 0
        return msg, dropped


def create_app(
    model: HandModel | None = None,
    params: RetargetParams | None = None,
    heartbeat_s: float = 2.0,
    reap_s: float = 30.0,
) -> FastAPI:
    model = model if model is not None else default_hand_model()
    defaults = params if params is not None else RetargetParams()
    descriptor = serve_model_descriptor(model)
    app = FastAPI(title="teleopkit service")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["GET"], allow_headers=["*"]
    )
    sessions: dict[str, TeleopSession] = {}
    started = time.time()

    @app.get("/health")
    def health():
        return {"status": "ok", "sessions": len(sessions), "uptime_s": time.time() - started}

    @app.get("/model")
    def model_descriptor():
        return descriptor

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket):
        await ws.accept()
        try:
            hello = await asyncio.wait_for(ws.receive_json(), timeout=reap_s)
        except (asyncio.TimeoutError, WebSocketDisconnect):
            await ws.close(code=1002)
            return
        if not isinstance(hello, dict) or hello.get("type") != "hello":
            await ws.send_json({"type": "error", "message": "expected hello"})
            await ws.close(code=1002)
            return

        session = TeleopSession(model, defaults)
        sessions[session.session_id] = session
        out_q: asyncio.Queue = asyncio.Queue()
        slot = LatestSlot()
        wake = asyncio.Event()
        last_rx = time.monotonic()

        await ws.send_json(
            {
                "type": "hello",
                "session_id": session.session_id,
                "version": PROTOCOL_VERSION,
                "model_descriptor": descriptor,
                "defaults": _params_payload(defaults),
                "heartbeat_s": heartbeat_s,
            }
        )

        async def reader():
            nonlocal last_rx
            while True:
                msg = await ws.receive_json()
                last_rx = time.monotonic()
                kind = msg.get("type") if isinstance(msg, dict) else None
                if kind == "pose_update":
                    slot.push(msg)
                    wake.set()
                elif kind == "set_params":
                    updates = {k: v for k, v in msg.items() if k != "type"}
                    try:
                        out_q.put_nowait(session.set_params(updates))
                    except ProtocolError as e:
                        out_q.put_nowait({"type": "error", "message": str(e)})
                elif kind == "hello":
                    out_q.put_nowait({"type": "error", "message": "session already initialized"})
                else:
                    out_q.put_nowait({"type": "error", "message": f"unknown message type {kind!r}"})

        async def solver():
            while True:
                await wake.wait()
                wake.clear()
                while (entry := slot.pop()) is not None:
                    msg, dropped = entry
                    seq = msg.get("seq", 0)
                    try:
                        reply = session.pose_update(msg.get("frames"), seq=seq, dropped=dropped)
                    except (ProtocolError, ValueError) as e:
                        reply = {"type": "error", "message": str(e), "seq": seq, "dropped": dropped}
                    out_q.put_nowait(reply)
                    await asyncio.sleep(0)  # let the reader coalesce bursts

        async def sender():
            while True:
                await ws.send_json(await out_q.get())

        async def heartbeat():
            while True:
                await asyncio.sleep(heartbeat_s)
                out_q.put_nowait({"type": "heartbeat", "t": time.time()})

        async def watchdog():
            while True:
                await asyncio.sleep(min(reap_s / 4, 1.0))
                if time.monotonic() - last_rx > reap_s:
                    await ws.close(code=1001, reason="idle timeout")
                    return

        tasks = [
            asyncio.create_task(coro())
            for coro in (reader, solver, sender, heartbeat, watchdog)
        ]
        try:
            done, pending = await asyncio.wait(tasks, return_when=asyncio.FIRST_COMPLETED)
            for t in done:
                exc = t.exception()
                if exc is not None and not isinstance(exc, (WebSocketDisconnect, RuntimeError)):
                    raise exc
        finally:
            for t in tasks:
                t.cancel()
            sessions.pop(session.session_id, None)

    return app


def default_app() -> FastAPI:
    """Factory for ``uvicorn --factory teleopkit.service:default_app``."""
    return create_app()
