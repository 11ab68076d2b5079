"""Task-space-vector retargeting.

Maps the four tracked frames (palm, thumb tip, index tip, middle tip) to
robot joint angles by minimizing

    sum over ordered pairs i != j of |r_ij(q) - s*h_ij|^2  +  alpha*|q - q_prev|^2

subject to joint limits, where r_ij(q) is the displacement between robot
frame origins under forward kinematics, h_ij the corresponding human
displacement (scaled by ``human_scale`` s), and q_prev the previous
solution (warm start and smoothing anchor).

The solver is a projected, damped Gauss-Newton iteration with a
backtracking line search along the feasible (clamped) arc.  Joint limits
are hard bounds, never penalties.  The gradient is analytic, built from
the frame position jacobians.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable, Mapping

import numpy as np

from .geometry import Pose
from .hand_model import (
    TASK_FRAME_NAMES,
    HandModel,
    clamp_to_limits,
    fk_task_frames,
    fk_task_frames_with_jacobian,
)

# Canonical frame indices 1..4 (palm, thumb_tip, index_tip, middle_tip).
FRAME_INDEX = {name: i + 1 for i, name in enumerate(TASK_FRAME_NAMES)}

# The 6 unordered pairs backing storage, and all 12 ordered pairs in the
# order used for residual vectors and wire payloads.
UNORDERED_PAIRS = ((1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4))
ORDERED_PAIRS = tuple(
    (i, j) for i in range(1, 5) for j in range(1, 5) if i != j
)
_PAIR_I = np.array([i - 1 for i, _ in ORDERED_PAIRS])
_PAIR_J = np.array([j - 1 for _, j in ORDERED_PAIRS])


class TsvSet:
    """The 12 task-space vectors between the four frames.

    Only the 6 upper-triangle vectors are stored; the mirrored entries are
    produced by negation, so antisymmetry holds exactly.
    """

    __slots__ = ("_v",)

    def __init__(self, upper: np.ndarray):
        v = np.asarray(upper, dtype=float)
        if v.shape != (6, 3):
            raise ValueError(f"expected (6, 3) upper-triangle vectors, got {v.shape}")
        v = v.copy()
        v.setflags(write=False)
        self._v = v

    @classmethod
    def from_positions(cls, positions: np.ndarray) -> "TsvSet":
        """Build from the (4, 3) frame positions in canonical order."""
        p = np.asarray(positions, dtype=float)
        if p.shape != (4, 3):
            raise ValueError(f"expected (4, 3) positions, got {p.shape}")
        return cls(np.stack([p[j - 1] - p[i - 1] for i, j in UNORDERED_PAIRS]))

    def __getitem__(self, pair: tuple[int, int]) -> np.ndarray:
        i, j = pair
        if i == j or not (1 <= i <= 4 and 1 <= j <= 4):
            raise KeyError(pair)
        if i < j:
            return self._v[UNORDERED_PAIRS.index((i, j))]
        return -self._v[UNORDERED_PAIRS.index((j, i))]

    def items(self):
        for pair in ORDERED_PAIRS:
            yield pair, self[pair]

    def ordered_array(self) -> np.ndarray:
        """(12, 3) array in ORDERED_PAIRS order."""
        signs = np.array([1.0 if i < j else -1.0 for i, j in ORDERED_PAIRS])
        rows = [UNORDERED_PAIRS.index((min(i, j), max(i, j))) for i, j in ORDERED_PAIRS]
        return signs[:, None] * self._v[rows]

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self._v)))

    def __eq__(self, other):
        return isinstance(other, TsvSet) and np.array_equal(self._v, other._v)

    def __repr__(self):
        return f"TsvSet({self._v!r})"


def task_space_vectors(frames: Mapping[str, Pose]) -> TsvSet:
    """Pairwise displacement vectors between the four canonical frames."""
    if set(frames) != set(TASK_FRAME_NAMES):
        missing = set(TASK_FRAME_NAMES) - set(frames)
        extra = set(frames) - set(TASK_FRAME_NAMES)
        raise ValueError(f"frames must be exactly {TASK_FRAME_NAMES}; missing={sorted(missing)} extra={sorted(extra)}")
    positions = np.stack([frames[name].position for name in TASK_FRAME_NAMES])
    return TsvSet.from_positions(positions)


@dataclass(frozen=True)
class RetargetParams:
    """Solver configuration.

    ``alpha`` and ``human_scale`` are the tunable knobs: alpha damps
    per-step joint change, human_scale compensates human/robot hand size
    mismatch.  Defaults are nominal, chosen for 125 Hz operation.
    """

    alpha: float = 0.01
    max_iters: int = 50
    grad_tol: float = 1e-7
    step_tol: float = 1e-9
    fd_step: float = 1e-6
    human_scale: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.alpha) and self.alpha >= 0):
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")
        if self.max_iters < 1:
            raise ValueError("max_iters must be positive")
        for name in ("grad_tol", "step_tol", "fd_step"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be > 0, got {v}")
        if not (0.1 <= self.human_scale <= 10.0):
            raise ValueError(f"human_scale must be within [0.1, 10], got {self.human_scale}")

    def updated(self, **changes) -> "RetargetParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class SolveResult:
    q: np.ndarray
    objective: float
    iterations: int
    converged: bool
    grad_norm: float


def eval_objective(
    model: HandModel,
    q: np.ndarray,
    h: TsvSet,
    q_prev: np.ndarray,
    params: RetargetParams,
) -> float:
    """Objective value: 12-term TSV mismatch plus the smoothing term."""
    q = model.check_config(q)
    q_prev = model.check_config(q_prev)
    pos = fk_task_frames(model, q)
    d = (pos[_PAIR_J] - pos[_PAIR_I]) - params.human_scale * h.ordered_array()
    dq = q - q_prev
    return float(np.einsum("ij,ij->", d, d)) + params.alpha * float(dq @ dq)


def eval_gradient(
    model: HandModel,
    q: np.ndarray,
    h: TsvSet,
    q_prev: np.ndarray,
    params: RetargetParams,
) -> np.ndarray:
    """Analytic gradient of :func:`eval_objective` with respect to q."""
    q = model.check_config(q)
    q_prev = model.check_config(q_prev)
    pos, jac = fk_task_frames_with_jacobian(model, q)
    d = (pos[_PAIR_J] - pos[_PAIR_I]) - params.human_scale * h.ordered_array()
    dj = jac[_PAIR_J] - jac[_PAIR_I]
    return 2.0 * np.einsum("kd,kdn->n", d, dj) + 2.0 * params.alpha * (q - q_prev)


def _residuals_and_jacobian(model, q, h_scaled, q_prev, sqrt_alpha):
    """Stacked least-squares residual (36 + dof,) and its jacobian."""
    n = model.dof
    pos, jac = fk_task_frames_with_jacobian(model, q)
    res = np.empty(36 + n)
    J = np.empty((36 + n, n))
    res[:36] = ((pos[_PAIR_J] - pos[_PAIR_I]) - h_scaled).ravel()
    J[:36] = (jac[_PAIR_J] - jac[_PAIR_I]).reshape(36, n)
    res[36:] = sqrt_alpha * (q - q_prev)
    if n:
        J[36:] = sqrt_alpha * np.eye(n)
    return res, J


def _objective_fast(model, q, h_scaled, q_prev, alpha):
    pos = fk_task_frames(model, q)
    d = (pos[_PAIR_J] - pos[_PAIR_I]) - h_scaled
    dq = q - q_prev
    return float(np.einsum("ij,ij->", d, d)) + alpha * float(dq @ dq)


def retarget_step(
    model: HandModel,
    h: TsvSet,
    q_prev: np.ndarray,
    params: RetargetParams,
) -> SolveResult:
    """One bound-constrained solve, warm-started from q_prev.

    Converged means the projected-gradient norm fell below ``grad_tol`` or
    an accepted step was shorter than ``step_tol`` within ``max_iters``.
    Returned q always satisfies the joint limits and its objective never
    exceeds the warm start's.
    """
    if not h.is_finite():
        raise ValueError("non-finite values in target task-space vectors")
    q_prev = clamp_to_limits(model, q_prev)
    n = model.dof
    lo, hi = model.limits_lo, model.limits_hi
    h_scaled = params.human_scale * h.ordered_array()
    alpha = params.alpha
    sqrt_alpha = np.sqrt(alpha)

    q = q_prev.copy()
    converged = False
    grad_norm = np.inf
    iterations = 0
    lam = 1e-8  # adaptive damping, scaled by the Gauss-Newton diagonal
    eye = np.eye(n) if n else None
    for it in range(1, params.max_iters + 1):
        iterations = it
        res, J = _residuals_and_jacobian(model, q, h_scaled, q_prev, sqrt_alpha)
        f = float(res @ res)
        g = 2.0 * (J.T @ res)
        if n == 0:
            converged = True
            grad_norm = 0.0
            break
        # Projected-gradient optimality measure (zero at a constrained minimum).
        grad_norm = float(np.linalg.norm(q - np.clip(q - g, lo, hi)))
        if grad_norm <= params.grad_tol:
            converged = True
            break

        # Active-set reduction: joints pinned at a bound with the gradient
        # pushing outward are frozen for this iteration, so the damped
        # Gauss-Newton step lives on the free subspace and is not mangled
        # by the later clip.
        active = ((q <= lo + 1e-10) & (g > 0)) | ((q >= hi - 1e-10) & (g < 0))
        free = np.flatnonzero(~active)
        H = J.T @ J
        rhs = -(J.T @ res)
        Hf = H[np.ix_(free, free)]
        rhsf = rhs[free]
        diagf = np.diag(np.diag(Hf)) + 1e-12 * np.eye(free.size)
        step = None
        while lam <= 1e16:
            try:
                df = np.linalg.solve(Hf + lam * diagf, rhsf)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            d = np.zeros(n)
            d[free] = df
            cand = np.clip(q + d, lo, hi)
            dstep = cand - q
            if float(g @ dstep) < 0.0:
                f_new = _objective_fast(model, cand, h_scaled, q_prev, alpha)
                if f_new < f:
                    step = dstep
                    q = cand
                    lam = max(lam / 3.0, 1e-12)
                    break
            lam *= 10.0
        if step is None:
            # Damping exhausted without a feasible decrease: stalled.
            break
        if float(np.linalg.norm(step)) <= params.step_tol:
            converged = True
            break

    objective = eval_objective(model, q, h, q_prev, params)
    return SolveResult(q=q, objective=objective, iterations=iterations, converged=converged, grad_norm=grad_norm)


def retarget_sequence(
    model: HandModel,
    targets: Iterable[TsvSet],
    q0: np.ndarray,
    params: RetargetParams,
) -> list[SolveResult]:
    """Chain retarget_step over a target stream, warm-starting each solve.

    Per-step failures (e.g. non-finite targets) are reported in the result
    list as unconverged entries holding the last good q; the sequence
    continues from there.
    """
    q_prev = clamp_to_limits(model, q0)
    results: list[SolveResult] = []
    for h in targets:
        try:
            r = retarget_step(model, h, q_prev, params)
        except ValueError:
            results.append(
                SolveResult(q=q_prev.copy(), objective=float("nan"), iterations=0, converged=False, grad_norm=float("nan"))
            )
            continue
        results.append(r)
        q_prev = r.q
    return results
