"""Inject database samples into real labeled scans with collision rejection.

Placement comes from the database (records carry world positions); collision
testing is a coarse conservative check of the record's footprint, inflated by
one collision cell, against an occupancy grid of obstacle points and against
footprints already inserted. Overlap is closed (touching counts).
"""

from __future__ import annotations

import hashlib
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import FrozenSet, List, Optional, Sequence, Tuple

import numpy as np

from lidarforge.forge import InstanceDatabase, InstanceRecord
from lidarforge.scan_io import LabeledScan, pack_label, read_scan, write_scan

# non-ground SemanticKITTI classes: anything a new object must not intersect
DEFAULT_OBSTACLE_LABELS = frozenset(
    [10, 11, 13, 15, 18, 20, 30, 31, 32, 50, 51, 70, 71, 80, 81])


@dataclass(frozen=True)
class AugmentPolicy:
    categories: Tuple[int, ...]
    samples_per_category: int = 1
    collision_cell: float = 0.5
    max_tries: int = 10
    obstacle_labels: FrozenSet[int] = DEFAULT_OBSTACLE_LABELS
    seed: int = 0

    def __post_init__(self):
        if self.samples_per_category < 0:
            raise ValueError("samples_per_category must be >= 0")
        if not self.collision_cell > 0:
            raise ValueError("collision_cell must be positive")
        if self.max_tries < 1:
            raise ValueError("max_tries must be >= 1")
        object.__setattr__(self, "categories",
                           tuple(int(c) for c in self.categories))
        object.__setattr__(self, "obstacle_labels",
                           frozenset(int(c) for c in self.obstacle_labels))

    def describe(self) -> dict:
        return {
            "categories": list(self.categories),
            "samples_per_category": self.samples_per_category,
            "collision_cell": self.collision_cell,
            "max_tries": self.max_tries,
            "obstacle_labels": sorted(self.obstacle_labels),
            "seed": self.seed,
        }


@dataclass
class OccupancyGrid:
    """Boolean xy grid: a cell is occupied iff it holds an obstacle point."""

    origin: Tuple[float, float]
    cell: float
    occupied: np.ndarray  # (nx, ny) bool


def occupancy_grid(scan: LabeledScan, obstacle_labels,
                   cell: float = 0.5) -> OccupancyGrid:
    """Rasterize the scan's obstacle points; ground classes never occupy."""
    if len(scan) == 0:
        return OccupancyGrid((0.0, 0.0), cell, np.zeros((1, 1), dtype=bool))
    xy = scan.points[:, :2].astype(np.float64)
    origin = (float(xy[:, 0].min()), float(xy[:, 1].min()))
    nx = int((xy[:, 0].max() - origin[0]) // cell) + 1
    ny = int((xy[:, 1].max() - origin[1]) // cell) + 1
    grid = np.zeros((nx, ny), dtype=bool)
    obstacle_ids = np.asarray(sorted(obstacle_labels), dtype=np.uint32)
    mask = np.isin(scan.semantic, obstacle_ids)
    if mask.any():
        ix = ((xy[mask, 0] - origin[0]) // cell).astype(np.int64)
        iy = ((xy[mask, 1] - origin[1]) // cell).astype(np.int64)
        grid[ix, iy] = True
    return OccupancyGrid(origin, cell, grid)


def _rects_overlap(a, b) -> bool:
    """Closed-rectangle intersection: touching edges count as overlap."""
    return a[0] <= b[1] and b[0] <= a[1] and a[2] <= b[3] and b[2] <= a[3]


def collides(record: InstanceRecord, grid: OccupancyGrid,
             placed: Sequence[Tuple[float, float, float, float]]) -> bool:
    """True iff the record's footprint, inflated by one collision cell,
    touches an occupied cell or an already-placed footprint."""
    x0, x1, y0, y1 = record.footprint
    c = grid.cell
    inflated = (x0 - c, x1 + c, y0 - c, y1 + c)

    for other in placed:
        if _rects_overlap(inflated, other):
            return True

    gx, gy = grid.origin
    nx, ny = grid.occupied.shape
    # closed overlap: a rectangle touching a cell's far edge still selects it
    ix0 = max(math.ceil((inflated[0] - gx) / c) - 1, 0)
    ix1 = min(math.floor((inflated[1] - gx) / c), nx - 1)
    iy0 = max(math.ceil((inflated[2] - gy) / c) - 1, 0)
    iy1 = min(math.floor((inflated[3] - gy) / c), ny - 1)
    if ix0 > ix1 or iy0 > iy1:
        return False
    return bool(grid.occupied[ix0:ix1 + 1, iy0:iy1 + 1].any())


@dataclass
class InsertionResult:
    category: int
    accepted: bool
    tries: int
    record_index: Optional[int] = None
    instance_id: Optional[int] = None
    num_points: int = 0
    footprint: Optional[Tuple[float, float, float, float]] = None

    def to_json(self) -> dict:
        return {
            "category": self.category,
            "accepted": self.accepted,
            "tries": self.tries,
            "record_index": self.record_index,
            "instance_id": self.instance_id,
            "num_points": self.num_points,
            "footprint": list(self.footprint) if self.footprint else None,
        }


@dataclass
class AugmentReport:
    frame_id: str
    insertions: List[InsertionResult] = field(default_factory=list)

    def accepted(self) -> List[InsertionResult]:
        return [r for r in self.insertions if r.accepted]

    def to_json(self) -> dict:
        return {
            "frame_id": self.frame_id,
            "insertions": [r.to_json() for r in self.insertions],
        }


def _frame_rng(seed: int, frame_id: str) -> np.random.Generator:
    digest = hashlib.sha256(frame_id.encode()).digest()
    frame_key = int.from_bytes(digest[:8], "little")
    return np.random.default_rng([seed, frame_key])


def augment_scan(scan: LabeledScan, db: InstanceDatabase,
                 policy: AugmentPolicy) -> Tuple[LabeledScan, AugmentReport]:
    """Insert up to samples_per_category database records per category.

    Records are drawn uniformly without replacement within the scan; colliding
    draws are rejected until max_tries. Accepted points are appended with the
    category's semantic id and a fresh instance id; the original points are
    never touched. Deterministic in (scan, db, policy.seed). A category that
    cannot be placed is reported, not fatal.
    """
    missing = [c for c in policy.categories if db.count(c) == 0]
    if missing:
        raise ValueError(f"database has no records for categories {missing}")

    rng = _frame_rng(policy.seed, scan.frame_id)
    grid = occupancy_grid(scan, policy.obstacle_labels, policy.collision_cell)
    report = AugmentReport(frame_id=scan.frame_id)

    next_instance = int(scan.instance.max()) + 1 if len(scan) else 1
    placed: List[Tuple[float, float, float, float]] = []
    new_points: List[np.ndarray] = []
    new_labels: List[np.ndarray] = []

    for category in policy.categories:
        unused = list(range(db.count(category)))
        for _ in range(policy.samples_per_category):
            result = InsertionResult(category=category, accepted=False, tries=0)
            while result.tries < policy.max_tries and unused:
                pick = unused.pop(int(rng.integers(0, len(unused))))
                result.tries += 1
                rec = db.records[category][pick]
                if collides(rec, grid, placed):
                    continue
                result.accepted = True
                result.record_index = pick
                result.instance_id = next_instance
                result.num_points = rec.num_points
                result.footprint = rec.footprint
                placed.append(rec.footprint)
                new_points.append(rec.points.astype(np.float32))
                new_labels.append(np.full(
                    rec.num_points, pack_label(category, next_instance),
                    dtype=np.uint32))
                next_instance += 1
                break
            report.insertions.append(result)

    if new_points:
        out = LabeledScan(
            points=np.vstack([scan.points] + new_points),
            labels=np.concatenate([scan.labels] + new_labels),
            frame_id=scan.frame_id,
        )
    else:
        out = LabeledScan(scan.points.copy(), scan.labels.copy(), scan.frame_id)
    return out, report


def augment_directory(
    scan_dir, label_dir, db: InstanceDatabase, policy: AugmentPolicy,
    out_scan_dir, out_label_dir, report_dir=None,
    jobs: int = 1, force: bool = False,
) -> List[AugmentReport]:
    """Augment every .bin/.label pair; mirrored output trees plus per-scan
    provenance JSON. Existing outputs are skipped unless force; results are
    independent of the job count."""
    scan_dir = Path(scan_dir)
    label_dir = Path(label_dir)
    out_scan_dir = Path(out_scan_dir)
    out_label_dir = Path(out_label_dir)
    out_scan_dir.mkdir(parents=True, exist_ok=True)
    out_label_dir.mkdir(parents=True, exist_ok=True)
    if report_dir is not None:
        report_dir = Path(report_dir)
        report_dir.mkdir(parents=True, exist_ok=True)

    scan_files = sorted(scan_dir.glob("*.bin"))
    if not scan_files:
        raise FileNotFoundError(f"no .bin scans in {scan_dir}")

    def run(scan_file: Path) -> Optional[AugmentReport]:
        label_file = label_dir / (scan_file.stem + ".label")
        if not label_file.exists():
            raise FileNotFoundError(f"missing labels for {scan_file.name}")
        out_bin = out_scan_dir / scan_file.name
        out_label = out_label_dir / label_file.name
        if not force and out_bin.exists() and out_label.exists():
            return None
        scan = read_scan(scan_file, label_file)
        augmented, report = augment_scan(scan, db, policy)
        write_scan(augmented, out_bin, out_label)
        if report_dir is not None:
            (report_dir / f"{scan_file.stem}.json").write_text(
                json.dumps(report.to_json(), indent=2, sort_keys=True) + "\n")
        return report

    if jobs > 1 and len(scan_files) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            reports = list(pool.map(run, scan_files))
    else:
        reports = [run(f) for f in scan_files]
    return [r for r in reports if r is not None]
