"""Dataset preprocessing: super-image tiling, vision dropout, resizing.

Sample batches hold, per item, a global camera image, a wrist camera
image, exactly eight single-channel tactile images, and a 13-entry joint
vector (6 arm + 7 hand).  Batches round-trip through ``.npz`` archives
with stacked arrays (keys: global, wrist, tactile, joints).

Dropout randomness comes from the Philox counter-based generator (as
implemented by numpy.random.Philox), keyed directly by the seed, so masks
are reproducible across platforms and implementations.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

JOINT_VECTOR_LEN = 13
TACTILE_COUNT = 8


@dataclass(frozen=True)
class SampleItem:
    global_img: np.ndarray
    wrist_img: np.ndarray
    tactile: tuple[np.ndarray, ...]
    joints: np.ndarray

    def __post_init__(self):
        if len(self.tactile) != TACTILE_COUNT:
            raise ValueError(f"expected {TACTILE_COUNT} tactile images, got {len(self.tactile)}")
        for img in self.tactile:
            if img.ndim != 2:
                raise ValueError("tactile images must be single-channel (2-D)")
        joints = np.asarray(self.joints, dtype=float)
        if joints.shape != (JOINT_VECTOR_LEN,):
            raise ValueError(f"joint vector must have length {JOINT_VECTOR_LEN}, got {joints.shape}")
        object.__setattr__(self, "tactile", tuple(self.tactile))
        object.__setattr__(self, "joints", joints)


@dataclass(frozen=True)
class SampleBatch:
    items: tuple[SampleItem, ...]

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(self.items))

    def __len__(self):
        return len(self.items)

    def to_npz(self, path) -> None:
        np.savez(
            path,
            **{
                "global": np.stack([it.global_img for it in self.items]),
                "wrist": np.stack([it.wrist_img for it in self.items]),
                "tactile": np.stack([np.stack(it.tactile) for it in self.items]),
                "joints": np.stack([it.joints for it in self.items]),
            },
        )

    @classmethod
    def from_npz(cls, path) -> "SampleBatch":
        with np.load(path) as data:
            required = {"global", "wrist", "tactile", "joints"}
            if set(data.files) != required:
                raise ValueError(f"batch archive must carry exactly {sorted(required)}, got {sorted(data.files)}")
            items = tuple(
                SampleItem(
                    global_img=data["global"][i],
                    wrist_img=data["wrist"][i],
                    tactile=tuple(data["tactile"][i]),
                    joints=data["joints"][i],
                )
                for i in range(data["global"].shape[0])
            )
        return cls(items)


def tile_super_image(imgs: Sequence[np.ndarray]) -> np.ndarray:
    """2x2 tiling: [0 | 1] on top, [2 | 3] below; a pixel-level bijection."""
    if len(imgs) != 4:
        raise ValueError(f"super-image tiling takes exactly 4 images, got {len(imgs)}")
    arrs = [np.asarray(im) for im in imgs]
    shape = arrs[0].shape
    if any(a.shape != shape for a in arrs) or len(shape) != 2:
        raise ValueError("all four images must be single-channel with identical dimensions")
    top = np.hstack([arrs[0], arrs[1]])
    bottom = np.hstack([arrs[2], arrs[3]])
    return np.vstack([top, bottom])


def untile_super_image(img: np.ndarray) -> list[np.ndarray]:
    """Inverse of :func:`tile_super_image`."""
    img = np.asarray(img)
    if img.ndim != 2 or img.shape[0] % 2 or img.shape[1] % 2:
        raise ValueError("super-image must be 2-D with even dimensions")
    h, w = img.shape[0] // 2, img.shape[1] // 2
    return [img[:h, :w].copy(), img[:h, w:].copy(), img[h:, :w].copy(), img[h:, w:].copy()]


def vision_dropout(batch: SampleBatch, p: float, seed: int) -> SampleBatch:
    """Zero both camera images with probability p per item (one shared draw).

    Tactile images and joint vectors are never modified.  Deterministic
    for a fixed seed via the Philox generator.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must be in [0, 1], got {p}")
    rng = np.random.Generator(np.random.Philox(seed))
    draws = rng.random(len(batch.items))
    items = []
    for item, u in zip(batch.items, draws):
        if u < p:
            items.append(
                SampleItem(
                    global_img=np.zeros_like(item.global_img),
                    wrist_img=np.zeros_like(item.wrist_img),
                    tactile=item.tactile,
                    joints=item.joints,
                )
            )
        else:
            items.append(item)
    return SampleBatch(tuple(items))


def resize_image(img: np.ndarray, size: tuple[int, int]) -> np.ndarray:
    """Bilinear resize to (width, height); identity targets return a copy.

    Accepts 2-D or channel-last 3-D arrays.  Half-pixel-center sampling
    with edge clamping; uint8 inputs are rounded half-away-from-zero back
    to uint8, float inputs stay float.
    """
    img = np.asarray(img)
    width, height = int(size[0]), int(size[1])
    if width <= 0 or height <= 0:
        raise ValueError(f"target dimensions must be positive, got {size}")
    if img.ndim not in (2, 3):
        raise ValueError("expected a 2-D or channel-last 3-D image")
    in_h, in_w = img.shape[:2]
    if (in_w, in_h) == (width, height):
        return img.copy()

    sx = (np.arange(width) + 0.5) * (in_w / width) - 0.5
    sy = (np.arange(height) + 0.5) * (in_h / height) - 0.5
    x0 = np.clip(np.floor(sx).astype(int), 0, in_w - 1)
    y0 = np.clip(np.floor(sy).astype(int), 0, in_h - 1)
    x1 = np.minimum(x0 + 1, in_w - 1)
    y1 = np.minimum(y0 + 1, in_h - 1)
    fx = np.clip(sx - x0, 0.0, 1.0)
    fy = np.clip(sy - y0, 0.0, 1.0)

    src = img.astype(float)
    if img.ndim == 2:
        wx = fx[None, :]
        wy = fy[:, None]
        top = src[np.ix_(y0, x0)] * (1 - wx) + src[np.ix_(y0, x1)] * wx
        bottom = src[np.ix_(y1, x0)] * (1 - wx) + src[np.ix_(y1, x1)] * wx
        out = top * (1 - wy) + bottom * wy
    else:
        wx = fx[None, :, None]
        wy = fy[:, None, None]
        top = src[np.ix_(y0, x0)] * (1 - wx) + src[np.ix_(y0, x1)] * wx
        bottom = src[np.ix_(y1, x0)] * (1 - wx) + src[np.ix_(y1, x1)] * wx
        out = top * (1 - wy) + bottom * wy
    if img.dtype == np.uint8:
        return np.floor(out + 0.5).astype(np.uint8)
    return out.astype(img.dtype)
