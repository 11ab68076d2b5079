"""Shadowless shading: intensity is a pure per-pixel function of (n, v).

There is no light-direction or neighborhood dependence anywhere in this
module, which is what makes the rendered images shadow-free by
construction: two pixels with identical surface normal and viewing
direction always receive identical intensities.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scene import GelPad


def normals_from_heightmap(hm: np.ndarray, pitch) -> np.ndarray:
    """Unit surface normals (+z toward the camera), shape (res_y, res_x, 3).

    Central differences in the interior, one-sided at the borders (so a
    plane heightmap yields a constant normal everywhere).  ``pitch`` is
    meters/pixel, a scalar or an (pitch_x, pitch_y) pair.
    """
    hm = np.asarray(hm, dtype=float)
    if np.isscalar(pitch):
        px = py = float(pitch)
    else:
        px, py = float(pitch[0]), float(pitch[1])
    if px <= 0 or py <= 0:
        raise ValueError("pitch must be positive")
    dy, dx = np.gradient(hm, py, px, edge_order=1)
    n = np.stack([-dx, -dy, np.ones_like(hm)], axis=-1)
    n /= np.linalg.norm(n, axis=-1, keepdims=True)
    return n


def view_map(gel: GelPad, camera_height: float) -> np.ndarray:
    """Unit vectors from each surface point toward the pinhole at gel center."""
    if camera_height <= 0:
        raise ValueError("camera_height must be positive")
    X, Y = gel.pixel_grid()
    v = np.stack([-X, -Y, np.full_like(X, camera_height)], axis=-1)
    v /= np.linalg.norm(v, axis=-1, keepdims=True)
    return v


@dataclass(frozen=True)
class ShadingParams:
    """Overhead-light model: ambient + diffuse n_z + semi-specular (n.v)^m."""

    ambient: float = 0.15
    diffuse_gain: float = 0.55
    specular_gain: float = 0.45
    shininess: float = 16.0

    def __post_init__(self):
        if not 0.0 <= self.ambient <= 1.0:
            raise ValueError("ambient must be in [0, 1]")
        if self.diffuse_gain < 0 or self.specular_gain < 0:
            raise ValueError("gains must be >= 0")
        if self.shininess < 1.0:
            raise ValueError("shininess must be >= 1")


def shade_values(nm: np.ndarray, vm: np.ndarray, p: ShadingParams) -> np.ndarray:
    """Pre-quantization intensity in [0, 1]; pure per-pixel in (n, v)."""
    nm = np.asarray(nm, dtype=float)
    vm = np.asarray(vm, dtype=float)
    if nm.shape != vm.shape:
        raise ValueError(f"normal map {nm.shape} and view map {vm.shape} differ")
    ndotv = np.maximum(np.sum(nm * vm, axis=-1), 0.0)
    val = p.ambient + p.diffuse_gain * nm[..., 2] + p.specular_gain * ndotv**p.shininess
    return np.clip(val, 0.0, 1.0)


def quantize_intensity(values: np.ndarray) -> np.ndarray:
    """8-bit quantization, round-half-away-from-zero (inputs are >= 0)."""
    return np.floor(np.asarray(values) * 255.0 + 0.5).astype(np.uint8)


def shade_analytic(nm: np.ndarray, vm: np.ndarray, p: ShadingParams) -> np.ndarray:
    """Single-channel 8-bit image from normal and view maps."""
    return quantize_intensity(shade_values(nm, vm, p))


def posenc(x: np.ndarray, bands: int) -> np.ndarray:
    """Positional encoding: [x, sin(2^k pi x), cos(2^k pi x)] for k < bands.

    Maps (..., 3) to (..., 3 * (2 * bands + 1)); bands = 0 returns x.
    """
    if bands < 0:
        raise ValueError("bands must be >= 0")
    x = np.asarray(x, dtype=float)
    parts = [x]
    for k in range(bands):
        arg = (2.0**k) * np.pi * x
        parts.append(np.sin(arg))
        parts.append(np.cos(arg))
    return np.concatenate(parts, axis=-1)
