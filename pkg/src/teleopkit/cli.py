"""Command-line entry points: ``retarget``, ``tactile`` and ``data``.

Exit codes: 0 on success, 2 on validation errors (malformed model, stream,
scene or image files), 3 when solver or training non-convergence exceeds
the allowed threshold.
"""
from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np

from .hand_model import ModelError, default_hand_model, load_hand_model_file
from .imageio import read_pgm, write_pgm
from .preprocess import SampleBatch, resize_image, tile_super_image, vision_dropout
from .retarget import RetargetParams
from .streams import StreamError, make_synthetic_stream, parse_pose_stream, replay, write_pose_stream
from .tactile import (
    RenderConfig,
    ShadingParams,
    TrainConfig,
    load_mlp,
    render,
    save_mlp,
    scene_from_json,
    train_shading_mlp,
)

VALIDATION_EXIT = 2
NONCONVERGENCE_EXIT = 3


def _fail_validation(message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(VALIDATION_EXIT)


def _load_model(path):
    try:
        return load_hand_model_file(path) if path else default_hand_model()
    except (ModelError, OSError) as e:
        _fail_validation(str(e))


@click.group()
def retarget():
    """Kinematic retargeting tools."""


@retarget.command("replay")
@click.option("--model", "model_path", type=click.Path(exists=True, dir_okay=False), default=None, help="Hand model file (default: shipped 7-DoF model).")
@click.option("--stream", "stream_path", type=click.Path(exists=True, dir_okay=False), required=True, help="JSON-lines pose stream.")
@click.option("--alpha", type=float, default=0.01, show_default=True, help="Smoothing weight.")
@click.option("--human-scale", type=float, default=1.0, show_default=True, help="Scale applied to human task-space vectors.")
@click.option("--max-iters", type=int, default=50, show_default=True)
@click.option("--out", "out_path", type=click.Path(dir_okay=False), required=True, help="Trajectory CSV output.")
@click.option("--stats-json", "stats_path", type=click.Path(dir_okay=False), default=None, help="Write replay statistics as JSON.")
@click.option("--report-dir", type=click.Path(file_okay=False), default=None, help="Render report figures (joints, objective, solve times) into this directory.")
@click.option("--max-unconverged", type=float, default=0.0, show_default=True, help="Allowed fraction of unconverged solves before exiting 3.")
def retarget_replay(model_path, stream_path, alpha, human_scale, max_iters, out_path, stats_path, report_dir, max_unconverged):
    """Replay a recorded pose stream through the retargeting solver."""
    model = _load_model(model_path)
    try:
        params = RetargetParams(alpha=alpha, human_scale=human_scale, max_iters=max_iters)
        stream = parse_pose_stream(Path(stream_path).read_text("utf-8"))
    except (StreamError, ValueError) as e:
        _fail_validation(str(e))
    traj, stats = replay(model, stream, params)
    Path(out_path).write_text(traj.to_csv())
    if stats_path:
        Path(stats_path).write_text(json.dumps(stats.to_dict(), indent=2) + "\n")
    if report_dir:
        from .report import write_replay_report

        for fig in write_replay_report(traj, stats, report_dir):
            click.echo(f"wrote {fig}")
    click.echo(
        f"replayed {stats.n_records} records: mean objective {stats.mean_objective:.3g}, "
        f"convergence {stats.convergence_rate:.1%}, 95p solve {stats.p95_solve_micros/1000:.2f} ms"
    )
    unconverged = 1.0 - stats.convergence_rate
    if stats.n_records and unconverged > max_unconverged:
        click.echo(f"error: unconverged fraction {unconverged:.3f} exceeds {max_unconverged}", err=True)
        sys.exit(NONCONVERGENCE_EXIT)


@retarget.command("serve")
@click.option("--model", "model_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def retarget_serve(model_path, host, port):
    """Run the live retargeting service (websocket + HTTP)."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(_load_model(model_path)), host=host, port=port, log_level="info")


@retarget.command("synth")
@click.option("--model", "model_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--records", type=int, default=1000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--step-scale", type=float, default=0.01, show_default=True, help="Joint-space random-walk step (rad).")
@click.option("--out", "out_path", type=click.Path(dir_okay=False), required=True)
def retarget_synth(model_path, records, seed, step_scale, out_path):
    """Generate a synthetic closed-loop pose stream from the model's own FK."""
    model = _load_model(model_path)
    stream = make_synthetic_stream(model, records, seed=seed, step_scale=step_scale)
    Path(out_path).write_text(write_pose_stream(stream))
    click.echo(f"wrote {records} records to {out_path}")


@click.group()
def tactile():
    """Tactile sensor simulation."""


@tactile.command("render")
@click.option("--scene", "scene_path", type=click.Path(exists=True, dir_okay=False), required=True, help="Scene JSON document.")
@click.option("--mode", type=click.Choice(["analytic", "mlp"]), default="analytic", show_default=True)
@click.option("--weights", "weights_path", type=click.Path(exists=True, dir_okay=False), default=None, help="Trained MLP weights (required for --mode mlp).")
@click.option("--out", "out_path", type=click.Path(dir_okay=False), required=True, help="Output PGM image.")
def tactile_render(scene_path, mode, weights_path, out_path):
    """Render a contact scene to a single-channel PGM image."""
    try:
        doc = json.loads(Path(scene_path).read_text("utf-8"))
        scene, sigma, camera_height, shading = scene_from_json(doc)
        mlp = None
        if mode == "mlp":
            if not weights_path:
                _fail_validation("--mode mlp requires --weights")
            mlp = load_mlp(weights_path)
        config = RenderConfig(sigma_px=sigma, camera_height=camera_height, shading=shading, mode=mode, mlp=mlp)
    except (ValueError, json.JSONDecodeError) as e:
        _fail_validation(str(e))
    write_pgm(out_path, render(scene, config))
    click.echo(f"wrote {out_path}")


@tactile.command("train")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--size", type=int, default=20000, show_default=True, help="Training set size.")
@click.option("--epochs", type=int, default=200, show_default=True)
@click.option("--out", "out_path", type=click.Path(dir_okay=False), required=True, help="Weights output path.")
def tactile_train(seed, size, epochs, out_path):
    """Train the shading MLP against the analytic illumination model."""
    try:
        result = train_shading_mlp(ShadingParams(), size, seed=seed, config=TrainConfig(epochs=epochs))
    except ValueError as e:
        _fail_validation(str(e))
    save_mlp(result.mlp, out_path)
    click.echo(f"holdout rmse {result.holdout_rmse:.5f} after {result.epochs_run} epochs; wrote {out_path}")
    if not result.converged:
        click.echo("error: training did not reach the target rmse", err=True)
        sys.exit(NONCONVERGENCE_EXIT)


@click.group()
def data():
    """Dataset preprocessing."""


@data.command("tile")
@click.argument("images", nargs=4, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", type=click.Path(dir_okay=False), required=True)
def data_tile(images, out_path):
    """Tile four equal-size PGM images into one 2x2 super-image."""
    try:
        imgs = [read_pgm(p) for p in images]
        tiled = tile_super_image(imgs)
    except ValueError as e:
        _fail_validation(str(e))
    write_pgm(out_path, tiled)
    click.echo(f"wrote {tiled.shape[1]}x{tiled.shape[0]} super-image to {out_path}")


@data.command("dropout")
@click.option("--in", "in_path", type=click.Path(exists=True, dir_okay=False), required=True, help="Batch .npz archive.")
@click.option("--out", "out_path", type=click.Path(dir_okay=False), required=True)
@click.option("--p", type=float, default=0.3, show_default=True, help="Dropout probability.")
@click.option("--seed", type=int, default=0, show_default=True)
def data_dropout(in_path, out_path, p, seed):
    """Apply vision dropout to a sample batch."""
    try:
        batch = SampleBatch.from_npz(in_path)
        dropped = vision_dropout(batch, p, seed)
    except ValueError as e:
        _fail_validation(str(e))
    dropped.to_npz(out_path)
    click.echo(f"wrote {len(dropped)} samples to {out_path}")


@data.command("resize")
@click.option("--in", "in_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--out", "out_path", type=click.Path(dir_okay=False), required=True)
@click.option("--width", type=int, required=True)
@click.option("--height", type=int, required=True)
def data_resize(in_path, out_path, width, height):
    """Bilinear-resize a PGM image."""
    try:
        img = read_pgm(in_path)
        resized = resize_image(img, (width, height))
    except ValueError as e:
        _fail_validation(str(e))
    write_pgm(out_path, resized)
    click.echo(f"wrote {width}x{height} image to {out_path}")
