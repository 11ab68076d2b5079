"""Quaternion math and rigid poses.

Quaternions are stored as (w, x, y, z) numpy arrays and kept unit-norm:
every construction or composition renormalizes, so downstream code can
rely on |q| = 1 within 1e-9.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

UNIT_TOL = 1e-9


def quat_normalize(q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    n = float(np.linalg.norm(q))
    if not np.isfinite(n) or n < 1e-12:
        raise ValueError(f"degenerate quaternion (norm {n})")
    if abs(n - 1.0) < 1e-12:
        # Already unit to round-off; dividing would churn the last ulp,
        # which breaks serialization round-trip stability.
        return q.copy()
    return q / n


def quat_multiply(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ]
    )


def quat_rotate(q: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Rotate a 3-vector by a unit quaternion."""
    u = q[1:]
    uv = np.cross(u, v)
    return v + 2.0 * (q[0] * uv + np.cross(u, uv))


def quat_from_axis_angle(axis: np.ndarray, angle: float) -> np.ndarray:
    half = 0.5 * angle
    s = np.sin(half)
    return np.array([np.cos(half), axis[0] * s, axis[1] * s, axis[2] * s])


def quat_conjugate(q: np.ndarray) -> np.ndarray:
    return np.array([q[0], -q[1], -q[2], -q[3]])


def quat_to_matrix(q: np.ndarray) -> np.ndarray:
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Pose:
    """Rigid transform: translation in meters plus a unit quaternion."""

    position: np.ndarray = field(default_factory=lambda: np.zeros(3))
    orientation: np.ndarray = field(default_factory=lambda: np.array([1.0, 0, 0, 0]))

    def __post_init__(self):
        p = np.asarray(self.position, dtype=float).reshape(3)
        if not np.all(np.isfinite(p)):
            raise ValueError("non-finite position")
        q = quat_normalize(self.orientation)
        object.__setattr__(self, "position", _frozen(p))
        object.__setattr__(self, "orientation", _frozen(q))

    @classmethod
    def identity(cls) -> "Pose":
        return cls()

    @classmethod
    def from_axis_angle(cls, xyz, axis, angle: float) -> "Pose":
        """Build from translation plus axis-angle rotation.

        A zero angle means identity rotation regardless of axis; otherwise
        the axis must already be unit length (rejected, never renormalized).
        """
        if angle == 0.0:
            return cls(np.asarray(xyz, dtype=float))
        axis = np.asarray(axis, dtype=float)
        if abs(np.linalg.norm(axis) - 1.0) > UNIT_TOL:
            raise ValueError(f"rotation axis not unit length: {axis}")
        return cls(np.asarray(xyz, dtype=float), quat_from_axis_angle(axis, angle))

    def compose(self, other: "Pose") -> "Pose":
        """self ∘ other (other expressed in self's frame)."""
        return Pose(
            self.position + quat_rotate(self.orientation, other.position),
            quat_multiply(self.orientation, other.orientation),
        )

    def transform_point(self, p: np.ndarray) -> np.ndarray:
        return self.position + quat_rotate(self.orientation, np.asarray(p, dtype=float))

    def rotation_matrix(self) -> np.ndarray:
        return quat_to_matrix(self.orientation)
