"""Replay report figures rendered alongside the CSV output."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .streams import JointTrajectory, ReplayStats

BUDGET_MICROS = 8000  # 125 Hz step budget


def write_replay_report(traj: JointTrajectory, stats: ReplayStats, outdir) -> list[Path]:
    """Render joint, objective and solve-time figures into ``outdir``."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    if not traj.records:
        return []
    t = np.array([r.timestamp for r in traj.records])
    qs = np.stack([r.q for r in traj.records])
    objectives = np.array([r.objective for r in traj.records])
    micros = np.array([r.solve_micros for r in traj.records])
    written = []

    fig, ax = plt.subplots(figsize=(8, 4.5))
    for k in range(qs.shape[1]):
        ax.plot(t, qs[:, k], lw=1.0, label=f"q{k}")
    ax.set_xlabel("time [s]")
    ax.set_ylabel("joint angle [rad]")
    ax.set_title("Retargeted joint trajectory")
    if qs.shape[1] <= 10:
        ax.legend(fontsize=8, ncol=4)
    fig.tight_layout()
    path = outdir / "joints.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(path)

    fig, ax = plt.subplots(figsize=(8, 3.5))
    positive = np.clip(objectives, 1e-18, None)
    ax.semilogy(t, positive, lw=1.0, color="tab:red")
    ax.set_xlabel("time [s]")
    ax.set_ylabel("objective [m$^2$]")
    ax.set_title(f"Objective (mean {stats.mean_objective:.3g})")
    fig.tight_layout()
    path = outdir / "objective.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(path)

    fig, ax = plt.subplots(figsize=(8, 3.5))
    ax.hist(micros / 1000.0, bins=50, color="tab:blue", alpha=0.8)
    ax.axvline(stats.p95_solve_micros / 1000.0, color="tab:orange", label=f"95p = {stats.p95_solve_micros/1000:.2f} ms")
    ax.axvline(BUDGET_MICROS / 1000.0, color="tab:red", ls="--", label="8 ms budget")
    ax.set_xlabel("solve time [ms]")
    ax.set_ylabel("steps")
    ax.set_title("Per-step solve time")
    ax.legend(fontsize=8)
    fig.tight_layout()
    path = outdir / "solve_times.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(path)
    return written
