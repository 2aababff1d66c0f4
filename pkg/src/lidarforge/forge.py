"""Simulate single tail-category instances against the emission fan and
persist them as an on-disk instance database.

A simulation poses the mesh, culls the fan to the mesh's angular window
(padded so the culling is observationally invisible), casts the remaining
rays and keeps the nearest hit per ray. Sparsity with distance emerges from
the fixed angular resolution; no extra thinning is applied.
"""

from __future__ import annotations

import hashlib
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from lidarforge.distribution import SpatialHistogram, sample_placement
from lidarforge.emission import EmissionGrid, LidarSpec, build_emission_grid, window_subgrid
from lidarforge.geometry import (
    RigidPose,
    SensorInsideMeshError,
    TriangleMesh,
    cast_rays,
    mesh_angular_window,
    transform_mesh,
)
from lidarforge.labels import label_name


class ForgeError(RuntimeError):
    pass


@dataclass(frozen=True)
class InstanceRecord:
    """One simulated object: its points, placement and footprint."""

    category: int
    points: np.ndarray  # (N, 4) x, y, z, intensity
    pose: RigidPose
    footprint: Tuple[float, float, float, float]  # x_min, x_max, y_min, y_max
    source_mesh: str
    range_m: float

    @property
    def num_points(self) -> int:
        return self.points.shape[0]


@dataclass
class ForgeCategory:
    """Build request for one category."""

    category: int
    meshes: Sequence[Tuple[str, TriangleMesh]]
    count: int
    scale_range: Tuple[float, float] = (1.0, 1.0)
    intensity: float = 0.2
    intensity_noise: float = 0.0
    name: str = ""

    def __post_init__(self):
        if not self.meshes:
            raise ValueError(f"category {self.category}: no meshes")
        if self.count < 0:
            raise ValueError(f"category {self.category}: negative count")
        if not 0 < self.scale_range[0] <= self.scale_range[1]:
            raise ValueError(f"category {self.category}: bad scale range {self.scale_range}")
        if not self.name:
            self.name = label_name(self.category)


@dataclass
class ForgePolicy:
    categories: List[ForgeCategory]
    retry_cap: int = 10

    def describe(self) -> dict:
        """Deterministic summary used for the config fingerprint."""
        return {
            "retry_cap": self.retry_cap,
            "categories": [
                {
                    "category": c.category,
                    "name": c.name,
                    "meshes": [name for name, _ in c.meshes],
                    "count": c.count,
                    "scale_range": list(c.scale_range),
                    "intensity": c.intensity,
                    "intensity_noise": c.intensity_noise,
                }
                for c in self.categories
            ],
        }


def fingerprint(payload: dict) -> str:
    """sha256 over canonicalized JSON."""
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def simulate_instance(
    mesh: TriangleMesh,
    pose: RigidPose,
    spec: LidarSpec,
    grid: EmissionGrid,
    *,
    category: int = 0,
    intensity: float = 0.2,
    intensity_noise: float = 0.0,
    rng: Optional[np.random.Generator] = None,
    source_mesh: str = "",
    use_window: bool = True,
) -> Optional[InstanceRecord]:
    """Scan one posed mesh with the fan; None when no ray hits it.

    The angular window is padded by one resolution step plus the grid's
    realized maximum jitter, which guarantees the windowed cast returns
    exactly the full-grid result (use_window=False casts every ray).
    """
    posed = transform_mesh(mesh, pose)
    center = np.asarray(spec.center, dtype=np.float64)
    if posed.aabb_contains(center):
        raise SensorInsideMeshError(
            "sensor center inside the posed mesh AABB; re-sample the placement")

    if use_window:
        window = mesh_angular_window(posed, center)
        sub = window_subgrid(grid, *window, pad_steps=1, margin=grid.max_jitter)
    else:
        sub = grid
    if sub.size == 0:
        return None

    dirs = sub.directions.reshape(-1, 3)
    s, idx = cast_rays(center, dirs, posed)
    hit = idx >= 0
    if not hit.any():
        return None
    pts = center + s[hit, None] * dirs[hit]

    n = pts.shape[0]
    intens = np.full(n, float(intensity))
    if intensity_noise > 0 and rng is not None:
        intens += rng.uniform(-intensity_noise, intensity_noise, n)
        np.clip(intens, 0.0, 1.0, out=intens)

    centroid = posed.centroid
    return InstanceRecord(
        category=category,
        points=np.column_stack([pts, intens]),
        pose=pose,
        footprint=(float(posed.aabb_min[0]), float(posed.aabb_max[0]),
                   float(posed.aabb_min[1]), float(posed.aabb_max[1])),
        source_mesh=source_mesh,
        range_m=float(np.linalg.norm(centroid - center)),
    )


@dataclass
class InstanceDatabase:
    """Records grouped by category plus a manifest describing every record."""

    records: Dict[int, List[InstanceRecord]]
    manifest: dict

    def categories(self):
        return sorted(self.records)

    def count(self, category: int) -> int:
        return len(self.records.get(category, ()))

    def save(self, path) -> None:
        path = Path(path)
        path.mkdir(parents=True, exist_ok=True)
        for cat, recs in sorted(self.records.items()):
            cat_dir = path / str(cat)
            cat_dir.mkdir(exist_ok=True)
            for i, rec in enumerate(recs):
                rec.points.astype("<f4").tofile(cat_dir / f"{i}.bin")
        (path / "manifest.json").write_text(
            json.dumps(self.manifest, indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path) -> "InstanceDatabase":
        path = Path(path)
        manifest = json.loads((path / "manifest.json").read_text())
        records: Dict[int, List[InstanceRecord]] = {}
        for key, entry in manifest["categories"].items():
            cat = int(key)
            recs = []
            for meta in entry["records"]:
                raw = np.fromfile(path / meta["file"], dtype="<f4").reshape(-1, 4)
                if raw.shape[0] != meta["points"]:
                    raise ForgeError(
                        f"{meta['file']}: {raw.shape[0]} points, manifest says "
                        f"{meta['points']}")
                pose = RigidPose(
                    yaw=meta["pose"]["yaw"],
                    flip_x=meta["pose"]["flip_x"],
                    scale=meta["pose"]["scale"],
                    translation=tuple(meta["pose"]["translation"]),
                )
                recs.append(InstanceRecord(
                    category=cat,
                    points=raw,
                    pose=pose,
                    footprint=tuple(meta["footprint"]),
                    source_mesh=meta["source_mesh"],
                    range_m=meta["range_m"],
                ))
            records[cat] = recs
        return cls(records=records, manifest=manifest)


def _record_meta(cat: int, index: int, rec: InstanceRecord) -> dict:
    return {
        "file": f"{cat}/{index}.bin",
        "points": rec.num_points,
        "pose": {
            "yaw": rec.pose.yaw,
            "flip_x": rec.pose.flip_x,
            "scale": rec.pose.scale,
            "translation": list(rec.pose.translation),
        },
        "footprint": list(rec.footprint),
        "range_m": rec.range_m,
        "source_mesh": rec.source_mesh,
    }


def _forge_record(cat: ForgeCategory, index: int, hist: SpatialHistogram,
                  spec: LidarSpec, shared_grid: Optional[EmissionGrid],
                  retry_cap: int, seed: int):
    """Simulate one database record; independent random stream per record."""
    rng = np.random.default_rng([seed, cat.category, index])
    tries = 0
    for _ in range(retry_cap):
        tries += 1
        jitter_seed = int(rng.integers(0, 2**32))
        mesh_idx = int(rng.integers(0, len(cat.meshes)))
        placement = sample_placement(hist, cat.category, rng)
        yaw = float(rng.uniform(0.0, 2.0 * math.pi))
        flip = bool(rng.random() < 0.5)
        scale = float(rng.uniform(cat.scale_range[0], cat.scale_range[1]))

        name, mesh = cat.meshes[mesh_idx]
        base = RigidPose(yaw=yaw, flip_x=flip, scale=scale)
        rotated = transform_mesh(mesh, base)
        # footprint bottom on the ground plane, centroid over the sampled spot
        centroid = mesh.centroid
        pose = RigidPose(
            yaw=yaw, flip_x=flip, scale=scale,
            translation=(
                placement.position[0] - float(centroid[0]),
                placement.position[1] - float(centroid[1]),
                -float(rotated.aabb_min[2]),
            ),
        )
        grid = shared_grid if shared_grid is not None else build_emission_grid(
            spec.with_seed(jitter_seed))
        try:
            rec = simulate_instance(
                mesh, pose, spec, grid,
                category=cat.category,
                intensity=cat.intensity,
                intensity_noise=cat.intensity_noise,
                rng=rng,
                source_mesh=name,
            )
        except SensorInsideMeshError:
            continue
        if rec is not None:
            return rec, tries
    return None, tries


def build_database(
    policy: ForgePolicy,
    hist: SpatialHistogram,
    spec: LidarSpec,
    seed: int = 0,
    jobs: int = 1,
) -> InstanceDatabase:
    """Simulate every requested record.

    Per-record random streams are derived from (seed, category, index), so the
    output is identical at any parallelism level. A record that exhausts the
    retry cap aborts the build naming its category (the placement prior is
    likely unreachable by the sensor).
    """
    for cat in policy.categories:
        if cat.category not in hist.counts or hist.total(cat.category) == 0:
            raise ForgeError(
                f"category {cat.category} ({cat.name}): empty histogram row")

    shared_grid = build_emission_grid(spec) if spec.jitter_sigma == 0 else None
    tasks = [(cat, i) for cat in policy.categories for i in range(cat.count)]

    def run(task):
        cat, i = task
        rec, tries = _forge_record(cat, i, hist, spec, shared_grid,
                                   policy.retry_cap, seed)
        return cat.category, i, rec, tries

    if jobs > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run, tasks))
    else:
        results = [run(t) for t in tasks]

    records: Dict[int, List[Optional[InstanceRecord]]] = {
        cat.category: [None] * cat.count for cat in policy.categories}
    total_tries: Dict[int, int] = {cat.category: 0 for cat in policy.categories}
    for cat_id, i, rec, tries in results:
        total_tries[cat_id] += tries
        if rec is None:
            raise ForgeError(
                f"category {cat_id} ({label_name(cat_id)}): record {i} failed "
                f"after {policy.retry_cap} tries; the placement prior is likely "
                f"out of the sensor's reach")
        records[cat_id][i] = rec

    manifest = {
        "format": 1,
        "seed": seed,
        "config_fingerprint": fingerprint({
            "sensor": spec.to_config(),
            "forge": policy.describe(),
        }),
        "diagnostics": {
            str(cat.category): {
                "requested": cat.count,
                "tries": total_tries[cat.category],
            }
            for cat in policy.categories
        },
        "categories": {
            str(cat.category): {
                "name": cat.name,
                "count": cat.count,
                "records": [
                    _record_meta(cat.category, i, rec)
                    for i, rec in enumerate(records[cat.category])
                ],
            }
            for cat in policy.categories
        },
    }
    return InstanceDatabase(
        records={k: list(v) for k, v in records.items()},
        manifest=manifest,
    )
