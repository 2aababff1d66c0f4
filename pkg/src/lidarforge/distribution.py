"""Per-category placement priors: 2D instance-count histograms over the
ground plane, estimated from labeled scans and sampled categorically.

Grid convention: rows index x bins, columns index y bins; cell (r, c) covers
[x_min + r*cell, x_min + (r+1)*cell) x [y_min + c*cell, y_min + (c+1)*cell).
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, Tuple

import numpy as np

from lidarforge.labels import label_name
from lidarforge.scan_io import LabeledScan

DEFAULT_CELL_SIZE = 10.0
DEFAULT_EXTENT = (-80.0, 80.0, -80.0, 80.0)


@dataclass
class GridConfig:
    cell_size: float = DEFAULT_CELL_SIZE
    extent: Tuple[float, float, float, float] = DEFAULT_EXTENT

    def __post_init__(self):
        x_min, x_max, y_min, y_max = self.extent
        if not (self.cell_size > 0 and x_min < x_max and y_min < y_max):
            raise ValueError(f"bad grid config: cell={self.cell_size}, extent={self.extent}")

    @property
    def shape(self) -> Tuple[int, int]:
        x_min, x_max, y_min, y_max = self.extent
        return (
            int(math.ceil((x_max - x_min) / self.cell_size)),
            int(math.ceil((y_max - y_min) / self.cell_size)),
        )


@dataclass(frozen=True)
class PlacementSample:
    category: int
    position: Tuple[float, float]
    cell: Tuple[int, int]


@dataclass
class SpatialHistogram:
    """Per-category instance counts on a fixed xy grid."""

    cell_size: float
    extent: Tuple[float, float, float, float]
    counts: Dict[int, np.ndarray]
    names: Dict[int, str] = field(default_factory=dict)
    dropped: Dict[int, int] = field(default_factory=dict)  # out-of-extent tally

    @property
    def shape(self) -> Tuple[int, int]:
        return GridConfig(self.cell_size, self.extent).shape

    def total(self, category: int) -> int:
        return int(self.counts[category].sum())

    def cell_origin(self, row: int, col: int) -> Tuple[float, float]:
        return (self.extent[0] + row * self.cell_size,
                self.extent[2] + col * self.cell_size)

    def save(self, path) -> None:
        payload = {
            "cell_size_m": self.cell_size,
            "extent_m": list(self.extent),
            "categories": {
                str(cat): {
                    "name": self.names.get(cat, label_name(cat)),
                    "rows": grid.shape[0],
                    "cols": grid.shape[1],
                    "counts": [int(v) for v in grid.ravel()],
                }
                for cat, grid in sorted(self.counts.items())
            },
        }
        Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path) -> "SpatialHistogram":
        payload = json.loads(Path(path).read_text())
        counts = {}
        names = {}
        for key, entry in payload["categories"].items():
            cat = int(key)
            counts[cat] = np.asarray(entry["counts"], dtype=np.int64).reshape(
                entry["rows"], entry["cols"])
            names[cat] = entry.get("name", label_name(cat))
        return cls(
            cell_size=float(payload["cell_size_m"]),
            extent=tuple(payload["extent_m"]),
            counts=counts,
            names=names,
        )


def _cluster_points(xyz: np.ndarray, max_dist: float) -> np.ndarray:
    """Single-linkage component label per point (distance <= max_dist links).

    Grid-bucketed union-find; only neighboring buckets are compared, which is
    exact for bucket size == max_dist.
    """
    n = xyz.shape[0]
    parent = np.arange(n)

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def union(a: int, b: int) -> None:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[rb] = ra

    keys = np.floor(xyz / max_dist).astype(np.int64)
    buckets: Dict[Tuple[int, int, int], list] = {}
    for i, key in enumerate(map(tuple, keys)):
        buckets.setdefault(key, []).append(i)

    limit = max_dist * max_dist
    offsets = [(dx, dy, dz) for dx in (-1, 0, 1) for dy in (-1, 0, 1) for dz in (-1, 0, 1)]
    for key, members in buckets.items():
        candidates = []
        for off in offsets:
            nb = (key[0] + off[0], key[1] + off[1], key[2] + off[2])
            if nb >= key:  # each bucket pair visited once
                candidates.extend(buckets.get(nb, ()))
        cand_arr = np.asarray(candidates)
        for i in members:
            d2 = np.sum((xyz[cand_arr] - xyz[i]) ** 2, axis=1)
            for j in cand_arr[d2 <= limit]:
                if j != i:
                    union(int(i), int(j))

    roots = np.array([find(int(i)) for i in range(n)])
    _, labels = np.unique(roots, return_inverse=True)
    return labels


def _instance_centroids(scan: LabeledScan, category: int, cluster_dist: float):
    """xy centroid per instance of the category in one scan.

    Points are grouped by the label word's instance id when the scan carries
    any for this category, otherwise by single-linkage clustering.
    """
    sem = scan.semantic
    mask = sem == np.uint32(category)
    if not mask.any():
        return np.zeros((0, 2))
    xyz = scan.points[mask, :3].astype(np.float64)
    inst = scan.instance[mask]
    if np.any(inst != 0):
        groups = inst
    else:
        groups = _cluster_points(xyz, cluster_dist)
    out = []
    for g in np.unique(groups):
        out.append(xyz[groups == g, :2].mean(axis=0))
    return np.asarray(out)


def accumulate_histogram(
    scans: Iterable[LabeledScan],
    categories,
    cfg: GridConfig | None = None,
    *,
    cluster_dist: float = 0.5,
) -> SpatialHistogram:
    """Count category instances per grid cell across a stream of scans.

    Each instance contributes 1 to the cell containing its centroid's (x, y);
    centroids outside the extent are dropped and tallied in `dropped`.
    Accumulation is order-independent. An empty scan stream is an error; a
    category absent from every scan yields a zero grid and a warning.
    """
    cfg = cfg or GridConfig()
    categories = [int(c) for c in categories]
    shape = cfg.shape
    counts = {cat: np.zeros(shape, dtype=np.int64) for cat in categories}
    dropped = {cat: 0 for cat in categories}
    x_min, x_max, y_min, y_max = cfg.extent

    n_scans = 0
    for scan in scans:
        n_scans += 1
        for cat in categories:
            for cx, cy in _instance_centroids(scan, cat, cluster_dist):
                if not (x_min <= cx < x_max and y_min <= cy < y_max):
                    dropped[cat] += 1
                    continue
                row = int((cx - x_min) // cfg.cell_size)
                col = int((cy - y_min) // cfg.cell_size)
                counts[cat][row, col] += 1
    if n_scans == 0:
        raise ValueError("empty scan stream")
    for cat in categories:
        if counts[cat].sum() == 0:
            warnings.warn(f"category {cat} ({label_name(cat)}) absent from all scans")
    return SpatialHistogram(
        cell_size=cfg.cell_size,
        extent=cfg.extent,
        counts=counts,
        names={cat: label_name(cat) for cat in categories},
        dropped=dropped,
    )


def sample_placement(hist: SpatialHistogram, category: int,
                     rng: np.random.Generator) -> PlacementSample:
    """Draw a cell proportionally to its count and a uniform position inside.

    Exact integer multinomial via cumulative counts; deterministic in the
    generator state.
    """
    if category not in hist.counts:
        raise KeyError(f"category {category} not in histogram")
    grid = hist.counts[category]
    total = int(grid.sum())
    if total == 0:
        raise ValueError(
            f"category {category} has an all-zero histogram; supply a non-empty "
            f"prior or opt in to a uniform road-band prior explicitly")
    cum = np.cumsum(grid.ravel())
    r = int(rng.integers(0, total))
    flat = int(np.searchsorted(cum, r, side="right"))
    row, col = divmod(flat, grid.shape[1])
    x0, y0 = hist.cell_origin(row, col)
    x = x0 + float(rng.random()) * hist.cell_size
    y = y0 + float(rng.random()) * hist.cell_size
    return PlacementSample(category=category, position=(x, y), cell=(row, col))
