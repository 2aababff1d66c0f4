"""Command line entry point: stats, build-db, simulate, augment, eval,
export-ply. Exit codes: 0 success, 1 validation error, 2 runtime error.

Every subcommand that writes artifacts also drops a run manifest (config
fingerprint, seed, versions, backend) next to its outputs.
"""

from __future__ import annotations

import csv
import json
import math
import sys
from pathlib import Path

import click
import numpy as np

import lidarforge
from lidarforge import _kernels
from lidarforge.augment import augment_directory
from lidarforge.config import ConfigError, load_config, resolve_forge_policy
from lidarforge.distribution import SpatialHistogram, accumulate_histogram
from lidarforge.emission import build_emission_grid
from lidarforge.forge import (
    ForgeError,
    InstanceDatabase,
    RigidPose,
    build_database,
    simulate_instance,
)
from lidarforge.labels import label_color, label_name
from lidarforge.meshio import load_mesh, write_ply_points
from lidarforge.metrics import evaluate_label_dirs, miou
from lidarforge.scan_io import ScanFormatError, read_scan


def _fail(code: int, message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _load_config(ctx) -> "lidarforge.config.PipelineConfig":
    path = ctx.obj.get("config")
    if path is None:
        _fail(1, "--config is required for this subcommand")
    try:
        cfg = load_config(path)
    except ConfigError as err:
        _fail(1, str(err))
    if ctx.obj.get("seed") is not None:
        cfg.seed = ctx.obj["seed"]
        cfg.sensor = cfg.sensor.with_seed(ctx.obj["seed"])
    return cfg


def _write_manifest(out_dir: Path, cfg, command: str, extra: dict | None = None):
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = {
        "command": command,
        "config_fingerprint": cfg.fingerprint if cfg is not None else None,
        "seed": cfg.seed if cfg is not None else None,
        "version": lidarforge.__version__,
        "kernel_backend": _kernels.BACKEND,
    }
    manifest.update(extra or {})
    (out_dir / "run_manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n")


@click.group()
@click.option("--config", type=click.Path(exists=True, dir_okay=False),
              help="pipeline config JSON")
@click.option("--seed", type=int, default=None, help="override the config seed")
@click.option("--jobs", type=int, default=1, show_default=True,
              help="parallel workers (output is identical for any value)")
@click.option("--force", is_flag=True, help="recompute outputs that already exist")
@click.pass_context
def main(ctx, config, seed, jobs, force):
    """Synthesize, store and inject rare-category LiDAR instances."""
    ctx.ensure_object(dict)
    ctx.obj.update(config=config, seed=seed, jobs=max(1, jobs), force=force)


@main.command()
@click.option("--scans", "scans_dir", required=True,
              type=click.Path(exists=True, file_okay=False))
@click.option("--labels", "labels_dir", required=True,
              type=click.Path(exists=True, file_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--csv", "csv_dir", type=click.Path(file_okay=False),
              help="also write one CSV of cell counts per category")
@click.pass_context
def stats(ctx, scans_dir, labels_dir, out_path, csv_dir):
    """Estimate the per-category placement histogram from labeled scans."""
    cfg = _load_config(ctx)
    if not cfg.augment and not cfg.forge_categories:
        _fail(1, "config names no categories (forge.categories or augment.categories)")
    categories = ([c.category for c in cfg.forge_categories]
                  or list(cfg.augment.categories))

    scans_dir = Path(scans_dir)
    labels_dir = Path(labels_dir)
    scan_files = sorted(scans_dir.glob("*.bin"))
    if not scan_files:
        _fail(1, f"no .bin scans in {scans_dir}")

    def stream():
        for scan_file in scan_files:
            label_file = labels_dir / (scan_file.stem + ".label")
            if not label_file.exists():
                _fail(1, f"missing labels for {scan_file.name}")
            yield read_scan(scan_file, label_file)

    try:
        hist = accumulate_histogram(stream(), categories, cfg.grid)
    except (ScanFormatError, ValueError) as err:
        _fail(2, str(err))
    hist.save(out_path)
    if csv_dir:
        csv_dir = Path(csv_dir)
        csv_dir.mkdir(parents=True, exist_ok=True)
        for cat, grid in hist.counts.items():
            with (csv_dir / f"{label_name(cat)}_{cat}.csv").open("w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["x_center", "y_center", "count"])
                for r in range(grid.shape[0]):
                    for c in range(grid.shape[1]):
                        x0, y0 = hist.cell_origin(r, c)
                        writer.writerow([
                            x0 + hist.cell_size / 2, y0 + hist.cell_size / 2,
                            int(grid[r, c]),
                        ])
    _write_manifest(Path(out_path).parent, cfg, "stats",
                    {"scans": len(scan_files)})
    totals = {label_name(c): hist.total(c) for c in categories}
    click.echo(f"histogram written to {out_path}: {totals}")


@main.command("build-db")
@click.option("--histogram", "hist_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.pass_context
def build_db(ctx, hist_path, out_dir):
    """Simulate the configured instance counts into a database directory."""
    cfg = _load_config(ctx)
    try:
        policy = resolve_forge_policy(cfg, Path(ctx.obj["config"]).parent)
    except ConfigError as err:
        _fail(1, str(err))
    hist = SpatialHistogram.load(hist_path)
    try:
        db = build_database(policy, hist, cfg.sensor, seed=cfg.seed,
                            jobs=ctx.obj["jobs"])
    except (ForgeError, ValueError) as err:
        _fail(2, str(err))
    db.save(out_dir)
    _write_manifest(Path(out_dir), cfg, "build-db")
    counts = {label_name(c): db.count(c) for c in db.categories()}
    click.echo(f"database written to {out_dir}: {counts}")


@main.command()
@click.option("--mesh", "mesh_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--x", "pos_x", type=float, default=10.0, show_default=True)
@click.option("--y", "pos_y", type=float, default=0.0, show_default=True)
@click.option("--yaw-deg", type=float, default=0.0, show_default=True)
@click.option("--flip", is_flag=True)
@click.option("--scale", type=float, default=1.0, show_default=True)
@click.option("--category", type=int, default=0, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.pass_context
def simulate(ctx, mesh_path, pos_x, pos_y, yaw_deg, flip, scale, category, out_path):
    """Debug run: scan one posed mesh and write the points as a colored PLY."""
    cfg = _load_config(ctx)
    mesh = load_mesh(mesh_path, y_up=cfg.mesh_y_up)
    grid = build_emission_grid(cfg.sensor)
    from lidarforge.geometry import transform_mesh

    base = RigidPose(yaw=math.radians(yaw_deg), flip_x=flip, scale=scale)
    rotated = transform_mesh(mesh, base)
    centroid = mesh.centroid
    pose = RigidPose(
        yaw=base.yaw, flip_x=flip, scale=scale,
        translation=(pos_x - float(centroid[0]), pos_y - float(centroid[1]),
                     -float(rotated.aabb_min[2])),
    )
    try:
        rec = simulate_instance(mesh, pose, cfg.sensor, grid, category=category,
                                source_mesh=Path(mesh_path).name)
    except ValueError as err:
        _fail(2, str(err))
    if rec is None:
        _fail(2, "no rays hit the posed mesh (outside the sensor field?)")
    color = np.tile(np.asarray(label_color(category), dtype=np.uint8),
                    (rec.num_points, 1))
    write_ply_points(out_path, rec.points[:, :3], color)
    _write_manifest(Path(out_path).parent, cfg, "simulate")
    click.echo(f"{rec.num_points} points at range {rec.range_m:.1f} m -> {out_path}")


@main.command()
@click.option("--scans", "scans_dir", required=True,
              type=click.Path(exists=True, file_okay=False))
@click.option("--labels", "labels_dir", required=True,
              type=click.Path(exists=True, file_okay=False))
@click.option("--db", "db_dir", required=True,
              type=click.Path(exists=True, file_okay=False))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.pass_context
def augment(ctx, scans_dir, labels_dir, db_dir, out_dir):
    """Inject database samples into every scan of a directory."""
    cfg = _load_config(ctx)
    if cfg.augment is None:
        _fail(1, "config has no augment section")
    db = InstanceDatabase.load(db_dir)
    missing = [c for c in cfg.augment.categories if db.count(c) == 0]
    if missing:
        _fail(1, f"database lacks categories {missing}")
    out_dir = Path(out_dir)
    try:
        reports = augment_directory(
            scans_dir, labels_dir, db, cfg.augment,
            out_dir / "velodyne", out_dir / "labels", out_dir / "provenance",
            jobs=ctx.obj["jobs"], force=ctx.obj["force"],
        )
    except (ScanFormatError, ValueError, FileNotFoundError) as err:
        _fail(2, str(err))
    _write_manifest(out_dir, cfg, "augment", {"scans_processed": len(reports)})
    inserted = sum(len(r.accepted()) for r in reports)
    click.echo(f"augmented {len(reports)} scans, {inserted} insertions -> {out_dir}")


@main.command("eval")
@click.option("--pred", "pred_dir", required=True,
              type=click.Path(exists=True, file_okay=False))
@click.option("--gt", "gt_dir", required=True,
              type=click.Path(exists=True, file_okay=False))
@click.option("--out", "out_path", type=click.Path(dir_okay=False),
              help="write the per-class IoU table as JSON")
@click.pass_context
def eval_cmd(ctx, pred_dir, gt_dir, out_path):
    """Per-class IoU and mean IoU between prediction and ground-truth labels."""
    try:
        cm, class_ids = evaluate_label_dirs(pred_dir, gt_dir)
        iou, mean = miou(cm)
    except (ValueError, FileNotFoundError) as err:
        _fail(2, str(err))
    rows = []
    for k, cid in enumerate(class_ids):
        value = iou[k]
        rows.append({
            "id": int(cid),
            "name": label_name(int(cid)),
            "iou": None if np.isnan(value) else float(value),
        })
        shown = "undefined" if np.isnan(value) else f"{value:.4f}"
        click.echo(f"{label_name(int(cid)):>14} ({int(cid):3d}): {shown}")
    click.echo(f"{'mean IoU':>20}: {mean:.4f}")
    if out_path:
        Path(out_path).write_text(json.dumps(
            {"classes": rows, "mean_iou": mean}, indent=2, sort_keys=True) + "\n")


@main.command("export-ply")
@click.option("--db", "db_dir", required=True,
              type=click.Path(exists=True, file_okay=False))
@click.option("--category", type=int, required=True)
@click.option("--index", type=int, default=0, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
def export_ply(db_dir, category, index, out_path):
    """Render one database record as a colored PLY for inspection."""
    db = InstanceDatabase.load(db_dir)
    if db.count(category) <= index:
        _fail(1, f"database has {db.count(category)} records for category {category}")
    rec = db.records[category][index]
    color = np.tile(np.asarray(label_color(category), dtype=np.uint8),
                    (rec.num_points, 1))
    write_ply_points(out_path, rec.points[:, :3], color)
    click.echo(f"{rec.num_points} points -> {out_path}")


if __name__ == "__main__":
    main()
