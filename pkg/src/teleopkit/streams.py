"""Pose-stream files, replay, and replay statistics.

Pose streams are JSON lines, one record per line::

    {"t": 0.008, "frames": {"palm": {"p": [x, y, z], "q": [w, x, y, z]}, ...}}

with strictly increasing timestamps and all four canonical frames in
every record.  Trajectories are CSV with header
``t,q0..q{n-1},objective,converged,solve_micros``.
"""
from __future__ import annotations

import json
import time
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .geometry import Pose
from .hand_model import TASK_FRAME_NAMES, HandModel, clamp_to_limits, forward_kinematics
from .retarget import RetargetParams, SolveResult, retarget_step, task_space_vectors


class StreamError(ValueError):
    """Malformed pose-stream or trajectory data; message names the line."""


@dataclass(frozen=True)
class PoseRecord:
    timestamp: float
    poses: dict[str, Pose]


@dataclass(frozen=True)
class PoseStream:
    records: tuple[PoseRecord, ...]

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))

    def __len__(self):
        return len(self.records)


def _pose_from_payload(payload, lineno: int, frame: str) -> Pose:
    try:
        p = np.asarray(payload["p"], dtype=float)
        q = np.asarray(payload["q"], dtype=float)
    except (KeyError, TypeError, ValueError) as e:
        raise StreamError(f"line {lineno}: frame {frame!r}: {e}") from None
    if p.shape != (3,) or q.shape != (4,):
        raise StreamError(f"line {lineno}: frame {frame!r}: p must be length 3 and q length 4")
    try:
        return Pose(p, q)
    except ValueError as e:
        raise StreamError(f"line {lineno}: frame {frame!r}: {e}") from None


def parse_pose_stream(text: str) -> PoseStream:
    """Parse and validate a JSON-lines pose stream; errors name line numbers."""
    records: list[PoseRecord] = []
    last_t = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        try:
            doc = json.loads(line)
        except json.JSONDecodeError as e:
            raise StreamError(f"line {lineno}: invalid JSON: {e}") from None
        if not isinstance(doc, dict) or "t" not in doc or "frames" not in doc:
            raise StreamError(f"line {lineno}: record must carry 't' and 'frames'")
        t = float(doc["t"])
        if not np.isfinite(t):
            raise StreamError(f"line {lineno}: non-finite timestamp")
        if last_t is not None and t <= last_t:
            raise StreamError(f"line {lineno}: timestamp {t} not strictly increasing (previous {last_t})")
        last_t = t
        frames = doc["frames"]
        if set(frames) != set(TASK_FRAME_NAMES):
            missing = set(TASK_FRAME_NAMES) - set(frames)
            raise StreamError(f"line {lineno}: missing frames {sorted(missing)}" if missing else f"line {lineno}: unexpected frames {sorted(set(frames) - set(TASK_FRAME_NAMES))}")
        poses = {name: _pose_from_payload(frames[name], lineno, name) for name in TASK_FRAME_NAMES}
        records.append(PoseRecord(t, poses))
    return PoseStream(tuple(records))


def write_pose_stream(stream: PoseStream) -> str:
    """Serialize to canonical JSON lines (shortest round-trip floats)."""
    lines = []
    for rec in stream.records:
        frames = {
            name: {"p": list(rec.poses[name].position), "q": list(rec.poses[name].orientation)}
            for name in TASK_FRAME_NAMES
        }
        lines.append(json.dumps({"t": rec.timestamp, "frames": frames}))
    return "\n".join(lines) + ("\n" if lines else "")


@dataclass(frozen=True)
class TrajectoryRecord:
    timestamp: float
    q: np.ndarray
    objective: float
    converged: bool
    solve_micros: int


@dataclass(frozen=True)
class JointTrajectory:
    records: tuple[TrajectoryRecord, ...]

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))

    def __len__(self):
        return len(self.records)

    def to_csv(self) -> str:
        if not self.records:
            return "t,objective,converged,solve_micros\n"
        n = len(self.records[0].q)
        header = "t," + ",".join(f"q{k}" for k in range(n)) + ",objective,converged,solve_micros"
        lines = [header]
        for r in self.records:
            qs = ",".join(repr(float(v)) for v in r.q)
            lines.append(
                f"{float(r.timestamp)!r},{qs},{float(r.objective)!r},{int(r.converged)},{int(r.solve_micros)}"
            )
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, text: str) -> "JointTrajectory":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines:
            raise StreamError("empty trajectory CSV")
        header = lines[0].split(",")
        if header[0] != "t" or header[-3:] != ["objective", "converged", "solve_micros"]:
            raise StreamError("line 1: unexpected trajectory CSV header")
        n = len(header) - 4
        records = []
        for lineno, line in enumerate(lines[1:], start=2):
            parts = line.split(",")
            if len(parts) != len(header):
                raise StreamError(f"line {lineno}: expected {len(header)} columns")
            try:
                records.append(
                    TrajectoryRecord(
                        timestamp=float(parts[0]),
                        q=np.array([float(v) for v in parts[1 : 1 + n]]),
                        objective=float(parts[1 + n]),
                        converged=bool(int(parts[2 + n])),
                        solve_micros=int(parts[3 + n]),
                    )
                )
            except ValueError as e:
                raise StreamError(f"line {lineno}: {e}") from None
        return cls(tuple(records))


@dataclass(frozen=True)
class ReplayStats:
    n_records: int
    mean_objective: float
    convergence_rate: float
    mean_solve_micros: float
    p95_solve_micros: float
    max_solve_micros: int

    def to_dict(self) -> dict:
        return {
            "n_records": self.n_records,
            "mean_objective": self.mean_objective,
            "convergence_rate": self.convergence_rate,
            "mean_solve_micros": self.mean_solve_micros,
            "p95_solve_micros": self.p95_solve_micros,
            "max_solve_micros": self.max_solve_micros,
        }


def compute_stats(traj: JointTrajectory) -> ReplayStats:
    if not traj.records:
        return ReplayStats(0, float("nan"), float("nan"), float("nan"), float("nan"), 0)
    objectives = np.array([r.objective for r in traj.records])
    micros = np.array([r.solve_micros for r in traj.records])
    converged = np.array([r.converged for r in traj.records])
    return ReplayStats(
        n_records=len(traj.records),
        mean_objective=float(objectives.mean()),
        convergence_rate=float(converged.mean()),
        mean_solve_micros=float(micros.mean()),
        p95_solve_micros=float(np.percentile(micros, 95)),
        max_solve_micros=int(micros.max()),
    )


def replay(
    model: HandModel,
    stream: PoseStream,
    params: RetargetParams,
    q0: np.ndarray | None = None,
) -> tuple[JointTrajectory, ReplayStats]:
    """Run retargeting over a recorded stream, timing every solve.

    Warm starts chain through the stream exactly as in live operation;
    per-record failures are flagged and the replay continues from the
    last good configuration.
    """
    q_prev = clamp_to_limits(model, np.zeros(model.dof) if q0 is None else q0)
    records: list[TrajectoryRecord] = []
    for rec in stream.records:
        start = time.perf_counter_ns()
        try:
            h = task_space_vectors(rec.poses)
            result = retarget_step(model, h, q_prev, params)
        except ValueError:
            result = SolveResult(q=q_prev.copy(), objective=float("nan"), iterations=0, converged=False, grad_norm=float("nan"))
        micros = (time.perf_counter_ns() - start) // 1000
        q_prev = result.q
        records.append(
            TrajectoryRecord(
                timestamp=rec.timestamp,
                q=result.q,
                objective=result.objective,
                converged=result.converged,
                solve_micros=int(micros),
            )
        )
    traj = JointTrajectory(tuple(records))
    return traj, compute_stats(traj)


def make_synthetic_stream(
    model: HandModel,
    n_records: int,
    seed: int = 0,
    step_scale: float = 0.01,
    rate_hz: float = 125.0,
) -> PoseStream:
    """Smooth joint-space random walk emitted as 'human' frame poses.

    The poses come from the model's own forward kinematics, so every
    record is exactly reachable: a closed-loop stream for replay checks.
    """
    rng = np.random.default_rng(seed)
    q = clamp_to_limits(model, np.zeros(model.dof))
    records = []
    for i in range(n_records):
        q = clamp_to_limits(model, q + rng.normal(scale=step_scale, size=model.dof))
        records.append(PoseRecord(timestamp=(i + 1) / rate_hz, poses=forward_kinematics(model, q)))
    return PoseStream(tuple(records))
