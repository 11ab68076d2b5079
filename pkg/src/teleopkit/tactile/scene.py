"""Contact geometry for the tactile simulator.

The gel surface is the z = 0 plane observed from +z; heightmaps store the
per-pixel penetration depth (meters, >= 0) of rigid primitives pressed
into it.  A primitive's pose fixes its lateral position and orientation;
``press_depth`` then places it vertically so its lowest point sits exactly
press_depth below the surface (the pose's own z coordinate is ignored).

Heightmaps, normal maps and images are plain numpy arrays: (res_y, res_x)
grids with row 0 at y = -height/2, column 0 at x = -width/2, pixel-center
sampling.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..geometry import Pose, quat_to_matrix

_SHAPE_DIMS = {"sphere": 1, "box": 3, "cylinder": 2}


@dataclass(frozen=True)
class GelPad:
    width: float
    height: float
    res_x: int
    res_y: int

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError("gel dimensions must be positive")
        if self.res_x < 2 or self.res_y < 2:
            raise ValueError("gel resolution must be at least 2x2")

    @property
    def pitch_x(self) -> float:
        return self.width / self.res_x

    @property
    def pitch_y(self) -> float:
        return self.height / self.res_y

    def pixel_grid(self) -> tuple[np.ndarray, np.ndarray]:
        """Pixel-center world coordinates (X, Y), each (res_y, res_x)."""
        x = (np.arange(self.res_x) + 0.5) * self.pitch_x - self.width / 2
        y = (np.arange(self.res_y) + 0.5) * self.pitch_y - self.height / 2
        return np.meshgrid(x, y)


@dataclass(frozen=True)
class Primitive:
    """Rigid indenter: sphere(r), box(wx, wy, wz) or cylinder(r, length)."""

    shape: str
    dims: tuple[float, ...]
    pose: Pose = field(default_factory=Pose.identity)
    press_depth: float = 0.0

    def __post_init__(self):
        if self.shape not in _SHAPE_DIMS:
            raise ValueError(f"unknown shape {self.shape!r}")
        if len(self.dims) != _SHAPE_DIMS[self.shape]:
            raise ValueError(f"{self.shape} takes {_SHAPE_DIMS[self.shape]} dimension(s)")
        if any(d <= 0 for d in self.dims):
            raise ValueError("primitive dimensions must be positive")
        if not (np.isfinite(self.press_depth) and self.press_depth >= 0):
            raise ValueError("press_depth must be >= 0")
        object.__setattr__(self, "dims", tuple(float(d) for d in self.dims))

    @classmethod
    def sphere(cls, radius, center=(0.0, 0.0), press_depth=0.0):
        return cls("sphere", (radius,), Pose(np.array([center[0], center[1], 0.0])), press_depth)

    @classmethod
    def box(cls, size, center=(0.0, 0.0), press_depth=0.0, orientation=None):
        pose = Pose(np.array([center[0], center[1], 0.0]), orientation if orientation is not None else [1, 0, 0, 0])
        return cls("box", tuple(size), pose, press_depth)

    @classmethod
    def cylinder(cls, radius, length, center=(0.0, 0.0), press_depth=0.0, orientation=None):
        pose = Pose(np.array([center[0], center[1], 0.0]), orientation if orientation is not None else [1, 0, 0, 0])
        return cls("cylinder", (radius, length), pose, press_depth)

    def support_below(self) -> float:
        """Distance from the body origin to the shape's lowest point along world -z."""
        u = quat_to_matrix(self.pose.orientation).T @ np.array([0.0, 0.0, 1.0])
        if self.shape == "sphere":
            return self.dims[0]
        if self.shape == "box":
            half = 0.5 * np.asarray(self.dims)
            return float(half @ np.abs(u))
        r, h = self.dims
        return float(r * np.hypot(u[0], u[1]) + 0.5 * h * abs(u[2]))


@dataclass(frozen=True)
class ContactScene:
    gel: GelPad
    primitives: tuple[Primitive, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "primitives", tuple(self.primitives))


def _vertical_ray_entry(prim: Primitive, X: np.ndarray, Y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Entry parameter t0 (= world z) of the vertical line through each pixel.

    Returns (t0, hit_mask); t0 is only meaningful where hit_mask is true.
    """
    R = quat_to_matrix(prim.pose.orientation)
    cz = prim.support_below() - prim.press_depth
    center = np.array([prim.pose.position[0], prim.pose.position[1], cz])

    # Line P(t) = (x, y, 0) + t * ez expressed in the body frame.
    rel = np.stack([X - center[0], Y - center[1], np.full_like(X, -center[2])], axis=-1)
    p0 = rel @ R  # row-vector form of R^T @ rel
    d = R.T @ np.array([0.0, 0.0, 1.0])

    big = 1e30
    tlo = np.full(X.shape, -big)
    thi = np.full(X.shape, big)
    hit = np.ones(X.shape, dtype=bool)

    def clip_slab(p0k, dk, half):
        nonlocal tlo, thi, hit
        if abs(dk) < 1e-12:
            hit &= np.abs(p0k) <= half
        else:
            a = (-half - p0k) / dk
            b = (half - p0k) / dk
            tlo = np.maximum(tlo, np.minimum(a, b))
            thi = np.minimum(thi, np.maximum(a, b))

    def clip_quadratic(px, py, dx, dy, radius):
        """Intersection with an infinite cylinder |xy| <= radius (body frame)."""
        nonlocal tlo, thi, hit
        a = dx * dx + dy * dy
        if a < 1e-18:
            hit &= px * px + py * py <= radius * radius
            return
        b = 2.0 * (px * dx + py * dy)
        c = px * px + py * py - radius * radius
        disc = b * b - 4.0 * a * c
        hit &= disc >= 0.0
        root = np.sqrt(np.maximum(disc, 0.0))
        tlo = np.maximum(tlo, (-b - root) / (2.0 * a))
        thi = np.minimum(thi, (-b + root) / (2.0 * a))

    if prim.shape == "sphere":
        r = prim.dims[0]
        b = 2.0 * np.einsum("...k,k->...", p0, d)
        c = np.einsum("...k,...k->...", p0, p0) - r * r
        disc = b * b - 4.0 * c
        hit &= disc >= 0.0
        root = np.sqrt(np.maximum(disc, 0.0))
        tlo = (-b - root) / 2.0
        thi = (-b + root) / 2.0
    elif prim.shape == "box":
        half = 0.5 * np.asarray(prim.dims)
        for k in range(3):
            clip_slab(p0[..., k], d[k], half[k])
    else:  # cylinder, axis along body z
        r, h = prim.dims
        clip_quadratic(p0[..., 0], p0[..., 1], d[0], d[1], r)
        clip_slab(p0[..., 2], d[2], 0.5 * h)

    hit &= tlo <= thi
    return tlo, hit


def render_heightmap(scene: ContactScene) -> np.ndarray:
    """Per-pixel penetration depth: max over primitives, floored at zero."""
    X, Y = scene.gel.pixel_grid()
    out = np.zeros(X.shape)
    for prim in scene.primitives:
        t0, hit = _vertical_ray_entry(prim, X, Y)
        pen = np.where(hit, np.maximum(-t0, 0.0), 0.0)
        np.maximum(out, pen, out=out)
    return out


def elastomer_filter(hm: np.ndarray, sigma: float) -> np.ndarray:
    """Gaussian smoothing standing in for gel compliance.

    Separable truncated kernel, radius ceil(4*sigma), weights normalized
    to one, replicate padding at the borders.  sigma = 0 is the identity.
    """
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    hm = np.asarray(hm, dtype=float)
    if sigma == 0:
        return hm.copy()
    radius = max(1, int(np.ceil(4.0 * sigma)))
    x = np.arange(-radius, radius + 1, dtype=float)
    kernel = np.exp(-0.5 * (x / sigma) ** 2)
    kernel /= kernel.sum()

    def conv_axis0(a):
        padded = np.pad(a, ((radius, radius), (0, 0)), mode="edge")
        out = np.zeros_like(a)
        for i, w in enumerate(kernel):
            out += w * padded[i : i + a.shape[0], :]
        return out

    return conv_axis0(conv_axis0(hm).T).T
