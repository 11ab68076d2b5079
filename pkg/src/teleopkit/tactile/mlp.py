"""Pixel-wise shading MLP: (normal, view direction) -> intensity.

Both input vectors are positional-encoded and concatenated; hidden layers
use tanh and the output is squashed through a logistic sigmoid, so the
prediction always lands in [0, 1].  Training fits the analytic shading
model by Adam on mean-squared intensity error and is deterministic for a
fixed seed.
"""
from __future__ import annotations

import json
import struct
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .shading import ShadingParams, posenc, shade_values


def encoded_width(bands: int) -> int:
    return 6 * (2 * bands + 1)


@dataclass
class ShadingMlp:
    layer_sizes: tuple[int, ...]
    weights: list[np.ndarray]  # per layer, shape (fan_in, fan_out)
    biases: list[np.ndarray]
    posenc_bands: int

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.layer_sizes)
        if len(sizes) < 2 or sizes[-1] != 1:
            raise ValueError("layer_sizes must end in a single output unit")
        if sizes[0] != encoded_width(self.posenc_bands):
            raise ValueError(
                f"input width {sizes[0]} does not match posenc width {encoded_width(self.posenc_bands)}"
            )
        if len(self.weights) != len(sizes) - 1 or len(self.biases) != len(sizes) - 1:
            raise ValueError("one weight and bias array per layer required")
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (sizes[k], sizes[k + 1]) or b.shape != (sizes[k + 1],):
                raise ValueError(f"layer {k}: weight shape {w.shape} or bias shape {b.shape} mismatch")
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise ValueError(f"layer {k}: non-finite parameters")
        self.layer_sizes = sizes


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def mlp_input(n: np.ndarray, v: np.ndarray, bands: int) -> np.ndarray:
    return np.concatenate([posenc(n, bands), posenc(v, bands)], axis=-1)


def mlp_apply(mlp: ShadingMlp, n: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Batched forward pass over (..., 3) normal/view arrays; output (...)."""
    x = mlp_input(np.asarray(n, dtype=float), np.asarray(v, dtype=float), mlp.posenc_bands)
    lead = x.shape[:-1]
    x = x.reshape(-1, x.shape[-1])
    for w, b in zip(mlp.weights[:-1], mlp.biases[:-1]):
        x = np.tanh(x @ w + b)
    x = _sigmoid(x @ mlp.weights[-1] + mlp.biases[-1])
    return x.reshape(lead)


def mlp_forward(mlp: ShadingMlp, n: np.ndarray, v: np.ndarray) -> float:
    """Intensity in [0, 1] for a single (n, v) pair."""
    return float(mlp_apply(mlp, np.asarray(n, dtype=float)[None, :], np.asarray(v, dtype=float)[None, :])[0])


@dataclass(frozen=True)
class TrainConfig:
    hidden: tuple[int, ...] = (64, 64)
    posenc_bands: int = 4
    epochs: int = 200
    batch_size: int = 256
    learning_rate: float = 3e-3
    holdout_fraction: float = 0.1
    target_rmse: float = 0.01


@dataclass
class TrainResult:
    mlp: ShadingMlp
    holdout_rmse: float
    epochs_run: int
    converged: bool
    final_train_loss: float
    train_seconds: float


def sample_nv_pairs(rng: np.random.Generator, count: int) -> tuple[np.ndarray, np.ndarray]:
    """Unit (n, v) pairs uniform on the upper hemisphere (z > 0)."""

    def hemisphere(size):
        u = rng.normal(size=(size, 3))
        u /= np.maximum(np.linalg.norm(u, axis=1, keepdims=True), 1e-12)
        u[:, 2] = np.abs(u[:, 2])
        return u

    return hemisphere(count), hemisphere(count)


def train_shading_mlp(
    oracle: ShadingParams,
    dataset_size: int,
    seed: int,
    config: TrainConfig = TrainConfig(),
) -> TrainResult:
    """Fit the MLP to the analytic shading oracle on sampled (n, v) pairs.

    Deterministic for a fixed seed.  Non-convergence (holdout RMSE above
    ``config.target_rmse``) is reported in the result, never raised.
    """
    if dataset_size < 1000:
        raise ValueError("dataset_size must be >= 1000")
    t_start = time.perf_counter()
    rng = np.random.default_rng(seed)
    n, v = sample_nv_pairs(rng, dataset_size)
    targets = shade_values(n, v, oracle)

    x = mlp_input(n, v, config.posenc_bands)
    n_holdout = max(1, int(round(dataset_size * config.holdout_fraction)))
    x_train, y_train = x[:-n_holdout], targets[:-n_holdout]
    x_hold, y_hold = x[-n_holdout:], targets[-n_holdout:]

    sizes = (encoded_width(config.posenc_bands),) + tuple(config.hidden) + (1,)
    weights = [
        rng.normal(scale=1.0 / np.sqrt(sizes[k]), size=(sizes[k], sizes[k + 1])) for k in range(len(sizes) - 1)
    ]
    biases = [np.zeros(sizes[k + 1]) for k in range(len(sizes) - 1)]

    m_w = [np.zeros_like(w) for w in weights]
    v_w = [np.zeros_like(w) for w in weights]
    m_b = [np.zeros_like(b) for b in biases]
    v_b = [np.zeros_like(b) for b in biases]
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    lr = config.learning_rate
    step = 0
    train_loss = np.inf

    for _ in range(config.epochs):
        order = rng.permutation(x_train.shape[0])
        losses = []
        for start in range(0, x_train.shape[0], config.batch_size):
            idx = order[start : start + config.batch_size]
            xb, yb = x_train[idx], y_train[idx]

            acts = [xb]
            z = xb
            for w, b in zip(weights[:-1], biases[:-1]):
                z = np.tanh(z @ w + b)
                acts.append(z)
            out = _sigmoid(z @ weights[-1] + biases[-1])[:, 0]

            err = out - yb
            losses.append(float(np.mean(err**2)))
            # d(mse)/d(logit) through the logistic output
            delta = (2.0 / xb.shape[0]) * err * out * (1.0 - out)
            delta = delta[:, None]

            grads_w, grads_b = [], []
            for layer in range(len(weights) - 1, -1, -1):
                grads_w.append(acts[layer].T @ delta)
                grads_b.append(delta.sum(axis=0))
                if layer > 0:
                    delta = (delta @ weights[layer].T) * (1.0 - acts[layer] ** 2)
            grads_w.reverse()
            grads_b.reverse()

            step += 1
            corr1 = 1.0 - beta1**step
            corr2 = 1.0 - beta2**step
            for k in range(len(weights)):
                m_w[k] = beta1 * m_w[k] + (1 - beta1) * grads_w[k]
                v_w[k] = beta2 * v_w[k] + (1 - beta2) * grads_w[k] ** 2
                weights[k] -= lr * (m_w[k] / corr1) / (np.sqrt(v_w[k] / corr2) + eps)
                m_b[k] = beta1 * m_b[k] + (1 - beta1) * grads_b[k]
                v_b[k] = beta2 * v_b[k] + (1 - beta2) * grads_b[k] ** 2
                biases[k] -= lr * (m_b[k] / corr1) / (np.sqrt(v_b[k] / corr2) + eps)
        train_loss = float(np.mean(losses))

    mlp = ShadingMlp(sizes, weights, biases, config.posenc_bands)
    pred = mlp_apply_encoded(mlp, x_hold)
    rmse = float(np.sqrt(np.mean((pred - y_hold) ** 2)))
    return TrainResult(
        mlp=mlp,
        holdout_rmse=rmse,
        epochs_run=config.epochs,
        converged=rmse <= config.target_rmse,
        final_train_loss=train_loss,
        train_seconds=time.perf_counter() - t_start,
    )


def mlp_apply_encoded(mlp: ShadingMlp, x: np.ndarray) -> np.ndarray:
    """Forward pass on already posenc-encoded inputs, shape (batch, width)."""
    for w, b in zip(mlp.weights[:-1], mlp.biases[:-1]):
        x = np.tanh(x @ w + b)
    return _sigmoid(x @ mlp.weights[-1] + mlp.biases[-1])[:, 0]


_MAGIC = b"TKMLP1\x00\x00"


def save_mlp(mlp: ShadingMlp, path) -> None:
    """Binary weights (little-endian int64 header + float64 data) plus a
    JSON sidecar of hyperparameters at <path>.json."""
    path = Path(path)
    n_layers = len(mlp.layer_sizes)
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<q", n_layers))
        fh.write(struct.pack("<q", mlp.posenc_bands))
        fh.write(struct.pack(f"<{n_layers}q", *mlp.layer_sizes))
        for w, b in zip(mlp.weights, mlp.biases):
            fh.write(np.ascontiguousarray(w, dtype="<f8").tobytes())
            fh.write(np.ascontiguousarray(b, dtype="<f8").tobytes())
    sidecar = {
        "layer_sizes": list(mlp.layer_sizes),
        "posenc_bands": mlp.posenc_bands,
        "hidden_activation": "tanh",
        "output_activation": "logistic",
        "dtype": "float64-le",
    }
    path.with_suffix(path.suffix + ".json").write_text(json.dumps(sidecar, indent=2))


def load_mlp(path) -> ShadingMlp:
    path = Path(path)
    raw = path.read_bytes()
    if raw[: len(_MAGIC)] != _MAGIC:
        raise ValueError(f"{path}: not a shading-MLP weights file")
    off = len(_MAGIC)
    n_layers, bands = struct.unpack_from("<2q", raw, off)
    off += 16
    sizes = struct.unpack_from(f"<{n_layers}q", raw, off)
    off += 8 * n_layers
    weights, biases = [], []
    for k in range(n_layers - 1):
        w = np.frombuffer(raw, dtype="<f8", count=sizes[k] * sizes[k + 1], offset=off).reshape(
            sizes[k], sizes[k + 1]
        )
        off += 8 * sizes[k] * sizes[k + 1]
        b = np.frombuffer(raw, dtype="<f8", count=sizes[k + 1], offset=off)
        off += 8 * sizes[k + 1]
        weights.append(w.copy())
        biases.append(b.copy())
    if off != len(raw):
        raise ValueError(f"{path}: trailing bytes in weights file")
    return ShadingMlp(tuple(sizes), weights, biases, bands)
