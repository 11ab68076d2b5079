"""Kinematic hand model: declarative model files, validation, forward kinematics.

Model files are UTF-8 text with one record per line::

    joint <name> <parent> <child> origin=<x,y,z,ax,ay,az,angle> axis=<x,y,z> limits=<lo,hi>
    frame <name> <link> offset=<x,y,z,ax,ay,az,angle>

Lines starting with ``#`` are comments.  Units are meters and radians;
rotations are axis-angle (unit axis, angle).  Joint order in the file
defines the index order of the joint-angle vector q.  Exactly the four
task frames ``palm, thumb_tip, index_tip, middle_tip`` must be declared.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources
from typing import Iterable, Mapping

import numpy as np

from .geometry import UNIT_TOL, Pose

TASK_FRAME_NAMES = ("palm", "thumb_tip", "index_tip", "middle_tip")


class ModelError(ValueError):
    """Raised for schema or validation failures in model documents."""


@dataclass(frozen=True)
class JointSpec:
    """Revolute joint: fixed origin transform then rotation about ``axis``."""

    name: str
    parent_link: str
    child_link: str
    origin: Pose
    axis: np.ndarray
    limits: tuple[float, float]

    def __post_init__(self):
        axis = np.asarray(self.axis, dtype=float).reshape(3)
        if abs(np.linalg.norm(axis) - 1.0) > UNIT_TOL:
            raise ModelError(f"joint {self.name!r}: axis must be unit length, got {axis}")
        axis.setflags(write=False)
        object.__setattr__(self, "axis", axis)
        lo, hi = float(self.limits[0]), float(self.limits[1])
        if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
            raise ModelError(f"joint {self.name!r}: limits must satisfy lo < hi, got ({lo}, {hi})")
        object.__setattr__(self, "limits", (lo, hi))


@dataclass(frozen=True)
class FrameAttachment:
    name: str
    link: str
    offset: Pose


class HandModel:
    """Immutable kinematic tree plus the four canonical task frames.

    Joint order defines the q index order.  The link graph must be a tree
    with a single root; every task frame must attach to an existing link.
    """

    def __init__(self, joints: Iterable[JointSpec], task_frames: Iterable[FrameAttachment]):
        self.joints: tuple[JointSpec, ...] = tuple(joints)
        frames = {f.name: f for f in task_frames}
        if set(frames) != set(TASK_FRAME_NAMES):
            missing = set(TASK_FRAME_NAMES) - set(frames)
            extra = set(frames) - set(TASK_FRAME_NAMES)
            raise ModelError(
                f"task frames must be exactly {TASK_FRAME_NAMES}; missing={sorted(missing)} extra={sorted(extra)}"
            )
        self.task_frames: Mapping[str, FrameAttachment] = frames

        names = [j.name for j in self.joints]
        if len(set(names)) != len(names):
            raise ModelError("duplicate joint names")

        # Tree checks: every link has at most one parent joint, single root.
        parent_of: dict[str, str] = {}
        links: set[str] = set()
        for j in self.joints:
            if j.child_link in parent_of:
                raise ModelError(f"link {j.child_link!r} has more than one parent joint")
            if j.parent_link == j.child_link:
                raise ModelError(f"joint {j.name!r} connects link {j.parent_link!r} to itself")
            parent_of[j.child_link] = j.parent_link
            links.add(j.parent_link)
            links.add(j.child_link)

        if self.joints:
            roots = sorted(links - set(parent_of))
            if len(roots) != 1:
                raise ModelError(f"link graph must have exactly one root, found {roots}")
            self.root_link = roots[0]
        else:
            frame_links = {f.link for f in frames.values()}
            if len(frame_links) != 1:
                raise ModelError("zero-joint model: all task frames must share one link")
            self.root_link = next(iter(frame_links))
            links = {self.root_link}

        # Cycle/connectivity check by walking to the root from every link.
        for link in links:
            seen = set()
            cur = link
            while cur != self.root_link:
                if cur in seen:
                    raise ModelError(f"cycle in link graph at {cur!r}")
                seen.add(cur)
                cur = parent_of[cur]
        self.links = frozenset(links)

        for f in frames.values():
            if f.link not in self.links:
                raise ModelError(f"frame {f.name!r} references undeclared link {f.link!r}")

        # Evaluation order: parents before children.
        index = {j.name: k for k, j in enumerate(self.joints)}
        joint_by_child = {j.child_link: j for j in self.joints}
        order: list[tuple[int, JointSpec]] = []
        resolved = {self.root_link}
        pending = list(self.joints)
        while pending:
            progressed = [j for j in pending if j.parent_link in resolved]
            if not progressed:
                raise ModelError("link graph is disconnected from the root")
            for j in progressed:
                order.append((index[j.name], j))
                resolved.add(j.child_link)
            done = {j.name for j in progressed}
            pending = [j for j in pending if j.name not in done]
        self._topo = tuple(order)

        lo = np.array([j.limits[0] for j in self.joints], dtype=float)
        hi = np.array([j.limits[1] for j in self.joints], dtype=float)
        lo.setflags(write=False)
        hi.setflags(write=False)
        self.limits_lo = lo
        self.limits_hi = hi

        # Ancestor joint mask per canonical frame (for position jacobians).
        chain_mask = np.zeros((len(TASK_FRAME_NAMES), self.dof), dtype=bool)
        for fi, fname in enumerate(TASK_FRAME_NAMES):
            link = frames[fname].link
            while link != self.root_link:
                j = joint_by_child[link]
                chain_mask[fi, index[j.name]] = True
                link = j.parent_link
        chain_mask.setflags(write=False)
        self._frame_joint_mask = chain_mask

        # Flattened evaluation program for the hot FK path: per joint a
        # (q index, parent slot, origin position, origin quat, axis) tuple
        # with plain floats, plus frame attachment records.  Slot 0 is the
        # root; joint k in topo order fills slot k+1.
        slot_of = {self.root_link: 0}
        prog = []
        for slot, (idx, j) in enumerate(self._topo, start=1):
            o = j.origin
            prog.append(
                (
                    idx,
                    slot_of[j.parent_link],
                    (float(o.position[0]), float(o.position[1]), float(o.position[2])),
                    (float(o.orientation[0]), float(o.orientation[1]), float(o.orientation[2]), float(o.orientation[3])),
                    (float(j.axis[0]), float(j.axis[1]), float(j.axis[2])),
                )
            )
            slot_of[j.child_link] = slot
        self._fk_prog = tuple(prog)
        fprog = []
        for name in TASK_FRAME_NAMES:
            f = frames[name]
            fprog.append(
                (
                    slot_of[f.link],
                    (float(f.offset.position[0]), float(f.offset.position[1]), float(f.offset.position[2])),
                    (
                        float(f.offset.orientation[0]),
                        float(f.offset.orientation[1]),
                        float(f.offset.orientation[2]),
                        float(f.offset.orientation[3]),
                    ),
                )
            )
        self._frame_prog = tuple(fprog)

    @property
    def dof(self) -> int:
        return len(self.joints)

    def check_config(self, q: np.ndarray) -> np.ndarray:
        q = np.asarray(q, dtype=float).reshape(-1)
        if q.shape != (self.dof,):
            raise ValueError(f"joint vector has length {q.shape[0]}, model has {self.dof} DoF")
        return q


def _parse_floats(field: str, value: str, count: int, lineno: int) -> np.ndarray:
    parts = value.split(",")
    if len(parts) != count:
        raise ModelError(f"line {lineno}: {field} expects {count} comma-separated values")
    try:
        return np.array([float(p) for p in parts])
    except ValueError as e:
        raise ModelError(f"line {lineno}: {field}: {e}") from None


def _parse_kv(tokens: list[str], required: tuple[str, ...], lineno: int) -> dict[str, str]:
    out = {}
    for tok in tokens:
        if "=" not in tok:
            raise ModelError(f"line {lineno}: expected key=value, got {tok!r}")
        k, v = tok.split("=", 1)
        if k in out:
            raise ModelError(f"line {lineno}: duplicate field {k!r}")
        out[k] = v
    if set(out) != set(required):
        raise ModelError(f"line {lineno}: fields must be exactly {required}")
    return out


def _pose_from_seven(field: str, value: str, lineno: int) -> Pose:
    v = _parse_floats(field, value, 7, lineno)
    try:
        return Pose.from_axis_angle(v[:3], v[3:6], v[6])
    except ValueError as e:
        raise ModelError(f"line {lineno}: {e}") from None


def load_hand_model(document: str) -> HandModel:
    """Parse and validate a model document (see module docstring for the schema)."""
    joints: list[JointSpec] = []
    frames: list[FrameAttachment] = []
    for lineno, raw in enumerate(document.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        kind = tokens[0]
        if kind == "joint":
            if len(tokens) != 7:
                raise ModelError(f"line {lineno}: joint records take 6 fields")
            name, parent, child = tokens[1:4]
            kv = _parse_kv(tokens[4:], ("origin", "axis", "limits"), lineno)
            origin = _pose_from_seven("origin", kv["origin"], lineno)
            axis = _parse_floats("axis", kv["axis"], 3, lineno)
            limits = _parse_floats("limits", kv["limits"], 2, lineno)
            try:
                joints.append(JointSpec(name, parent, child, origin, axis, (limits[0], limits[1])))
            except ModelError as e:
                raise ModelError(f"line {lineno}: {e}") from None
        elif kind == "frame":
            if len(tokens) != 4:
                raise ModelError(f"line {lineno}: frame records take 3 fields")
            name, link = tokens[1:3]
            kv = _parse_kv(tokens[3:], ("offset",), lineno)
            frames.append(FrameAttachment(name, link, _pose_from_seven("offset", kv["offset"], lineno)))
        else:
            raise ModelError(f"line {lineno}: unknown record kind {kind!r}")
    return HandModel(joints, frames)


def load_hand_model_file(path) -> HandModel:
    with open(path, "r", encoding="utf-8") as fh:
        return load_hand_model(fh.read())


def default_hand_model() -> HandModel:
    """The shipped 7-DoF model (nominal link lengths, see data/default_hand.model)."""
    doc = resources.files("teleopkit").joinpath("data/default_hand.model").read_text("utf-8")
    return load_hand_model(doc)


def clamp_to_limits(model: HandModel, q: np.ndarray) -> np.ndarray:
    """Clamp each joint angle into its [lo, hi] interval (idempotent)."""
    q = model.check_config(q)
    if model.dof == 0:
        return q.copy()
    return np.clip(q, model.limits_lo, model.limits_hi)


def _qmul(aw, ax, ay, az, bw, bx, by, bz):
    return (
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    )


def _qrot(w, x, y, z, vx, vy, vz):
    tx = 2.0 * (y * vz - z * vy)
    ty = 2.0 * (z * vx - x * vz)
    tz = 2.0 * (x * vy - y * vx)
    return (
        vx + w * tx + (y * tz - z * ty),
        vy + w * ty + (z * tx - x * tz),
        vz + w * tz + (x * ty - y * tx),
    )


def _walk_links(model: HandModel, qv: list[float], collect_joints: bool):
    """Scalar-float FK chain walk; the one place pose composition happens.

    Returns link slots as (px, py, pz, qw, qx, qy, qz) tuples, plus joint
    world origins/axes in q-index order when ``collect_joints`` is set.
    """
    slots = [(0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0)]
    n = len(qv)
    jorigin = [None] * n if collect_joints else None
    jaxis = [None] * n if collect_joints else None
    for idx, parent, op, oq, ax in model._fk_prog:
        px, py, pz, pw, pqx, pqy, pqz = slots[parent]
        rx, ry, rz = _qrot(pw, pqx, pqy, pqz, op[0], op[1], op[2])
        ox, oy, oz = px + rx, py + ry, pz + rz
        ow, oqx2, oqy2, oqz2 = _qmul(pw, pqx, pqy, pqz, oq[0], oq[1], oq[2], oq[3])
        if collect_joints:
            jorigin[idx] = (ox, oy, oz)
            jaxis[idx] = _qrot(ow, oqx2, oqy2, oqz2, ax[0], ax[1], ax[2])
        half = 0.5 * qv[idx]
        c, s = math.cos(half), math.sin(half)
        jw, jx, jy, jz = _qmul(ow, oqx2, oqy2, oqz2, c, ax[0] * s, ax[1] * s, ax[2] * s)
        inv = 1.0 / math.sqrt(jw * jw + jx * jx + jy * jy + jz * jz)
        slots.append((ox, oy, oz, jw * inv, jx * inv, jy * inv, jz * inv))
    return slots, jorigin, jaxis


def forward_kinematics(model: HandModel, q: np.ndarray) -> dict[str, Pose]:
    """World pose of the four task frames; pure function of (model, q)."""
    q = model.check_config(q)
    slots, _, _ = _walk_links(model, q.tolist(), False)
    out = {}
    for name, (slot, op, oq) in zip(TASK_FRAME_NAMES, model._frame_prog):
        px, py, pz, w, x, y, z = slots[slot]
        rx, ry, rz = _qrot(w, x, y, z, op[0], op[1], op[2])
        quat = _qmul(w, x, y, z, oq[0], oq[1], oq[2], oq[3])
        out[name] = Pose(np.array([px + rx, py + ry, pz + rz]), np.array(quat))
    return out


def fk_task_frames(model: HandModel, q: np.ndarray) -> np.ndarray:
    """Positions of the four task frames, shape (4, 3), canonical order."""
    q = model.check_config(q)
    slots, _, _ = _walk_links(model, q.tolist(), False)
    pos = np.empty((4, 3))
    for fi, (slot, op, _) in enumerate(model._frame_prog):
        px, py, pz, w, x, y, z = slots[slot]
        rx, ry, rz = _qrot(w, x, y, z, op[0], op[1], op[2])
        pos[fi, 0] = px + rx
        pos[fi, 1] = py + ry
        pos[fi, 2] = pz + rz
    return pos


def fk_task_frames_with_jacobian(model: HandModel, q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Frame positions (4, 3) and position jacobians (4, 3, dof).

    Column k of a frame's jacobian is w_k x (p_frame - o_k) for ancestor
    joints (world axis w_k through world point o_k), zero otherwise.
    """
    q = model.check_config(q)
    n = model.dof
    slots, jorigin, jaxis = _walk_links(model, q.tolist(), True)
    pos = np.empty((4, 3))
    for fi, (slot, op, _) in enumerate(model._frame_prog):
        px, py, pz, w, x, y, z = slots[slot]
        rx, ry, rz = _qrot(w, x, y, z, op[0], op[1], op[2])
        pos[fi, 0] = px + rx
        pos[fi, 1] = py + ry
        pos[fi, 2] = pz + rz

    jac = np.zeros((4, 3, n))
    if n:
        origins = np.array(jorigin)
        axes = np.array(jaxis)
        for fi in range(4):
            mask = model._frame_joint_mask[fi]
            if mask.any():
                w = axes[mask]
                o = origins[mask]
                jac[fi][:, mask] = np.cross(w, pos[fi][None, :] - o).T
    return pos, jac
