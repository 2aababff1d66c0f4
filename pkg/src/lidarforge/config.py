"""Pipeline configuration: one JSON file drives every CLI subcommand.

Top-level keys: seed, sensor, grid, forge, augment, io. Flags override config
values. Validation failures carry the offending field path.
"""

from __future__ import annotations

import glob
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from lidarforge.augment import DEFAULT_OBSTACLE_LABELS, AugmentPolicy
from lidarforge.distribution import GridConfig
from lidarforge.emission import LidarSpec
from lidarforge.forge import ForgeCategory, ForgePolicy, fingerprint
from lidarforge.labels import label_name
from lidarforge.meshio import load_mesh


class ConfigError(ValueError):
    """Invalid configuration; the message names the field path."""

    def __init__(self, path: str, message: str):
        self.field_path = path
        super().__init__(f"{path}: {message}")


@dataclass
class ForgeCategoryConfig:
    category: int
    mesh_patterns: List[str]
    count: int = 0
    scale_range: Tuple[float, float] = (1.0, 1.0)
    intensity: float = 0.2
    intensity_noise: float = 0.0
    name: str = ""


@dataclass
class PipelineConfig:
    seed: int = 0
    sensor: LidarSpec = field(default_factory=LidarSpec)
    grid: GridConfig = field(default_factory=GridConfig)
    forge_categories: List[ForgeCategoryConfig] = field(default_factory=list)
    forge_retry_cap: int = 10
    mesh_y_up: bool = False
    augment: Optional[AugmentPolicy] = None
    io: Dict[str, str] = field(default_factory=dict)
    raw: dict = field(default_factory=dict)

    @property
    def fingerprint(self) -> str:
        return fingerprint(self.raw)


def _require(cfg: dict, key: str, path: str):
    if key not in cfg:
        raise ConfigError(f"{path}.{key}", "missing required key")
    return cfg[key]


def load_config(path) -> PipelineConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as err:
        raise ConfigError(str(path), f"invalid JSON: {err}") from err
    if not isinstance(raw, dict):
        raise ConfigError(str(path), "top level must be an object")

    seed = int(raw.get("seed", 0))

    try:
        sensor_cfg = dict(raw.get("sensor", {}))
        sensor_cfg.setdefault("seed", seed)
        sensor = LidarSpec.from_config(sensor_cfg)
    except (ValueError, TypeError) as err:
        raise ConfigError("sensor", str(err)) from err

    grid_raw = raw.get("grid", {})
    try:
        grid = GridConfig(
            cell_size=float(grid_raw.get("cell_size_m", 10.0)),
            extent=tuple(grid_raw.get("extent_m", (-80.0, 80.0, -80.0, 80.0))),
        )
    except (ValueError, TypeError) as err:
        raise ConfigError("grid", str(err)) from err

    forge_raw = raw.get("forge", {})
    categories: List[ForgeCategoryConfig] = []
    for key, entry in forge_raw.get("categories", {}).items():
        path_prefix = f"forge.categories.{key}"
        try:
            cat_id = int(key)
        except ValueError as err:
            raise ConfigError(path_prefix, "category key must be an integer id") from err
        meshes = _require(entry, "meshes", path_prefix)
        if not isinstance(meshes, list) or not meshes:
            raise ConfigError(f"{path_prefix}.meshes", "must be a non-empty list")
        scale = entry.get("scale_range", [1.0, 1.0])
        categories.append(ForgeCategoryConfig(
            category=cat_id,
            mesh_patterns=[str(m) for m in meshes],
            count=int(entry.get("count", 0)),
            scale_range=(float(scale[0]), float(scale[1])),
            intensity=float(entry.get("intensity", 0.2)),
            intensity_noise=float(entry.get("intensity_noise", 0.0)),
            name=str(entry.get("name", "")) or label_name(cat_id),
        ))

    augment_policy = None
    if "augment" in raw:
        aug = raw["augment"]
        try:
            augment_policy = AugmentPolicy(
                categories=tuple(int(c) for c in _require(aug, "categories", "augment")),
                samples_per_category=int(aug.get("samples_per_category", 1)),
                collision_cell=float(aug.get("collision_cell", 0.5)),
                max_tries=int(aug.get("max_tries", 10)),
                obstacle_labels=frozenset(
                    int(c) for c in aug.get("obstacle_labels",
                                            sorted(DEFAULT_OBSTACLE_LABELS))),
                seed=int(aug.get("seed", seed)),
            )
        except (ValueError, TypeError) as err:
            raise ConfigError("augment", str(err)) from err

    io_map = {str(k): str(v) for k, v in raw.get("io", {}).items()}

    return PipelineConfig(
        seed=seed,
        sensor=sensor,
        grid=grid,
        forge_categories=categories,
        forge_retry_cap=int(forge_raw.get("retry_cap", 10)),
        mesh_y_up=bool(forge_raw.get("y_up", False)),
        augment=augment_policy,
        io=io_map,
        raw=raw,
    )


def resolve_forge_policy(cfg: PipelineConfig, base_dir: Path) -> ForgePolicy:
    """Expand mesh globs and load the meshes; validates referenced paths."""
    if not cfg.forge_categories:
        raise ConfigError("forge.categories", "no categories configured")
    cats: List[ForgeCategory] = []
    for cat_cfg in cfg.forge_categories:
        files: List[Path] = []
        for pattern in cat_cfg.mesh_patterns:
            pattern_path = Path(pattern)
            if not pattern_path.is_absolute():
                pattern_path = base_dir / pattern_path
            matches = sorted(glob.glob(str(pattern_path)))
            if matches:
                files.extend(Path(m) for m in matches)
            elif pattern_path.exists():
                files.append(pattern_path)
            else:
                raise ConfigError(
                    f"forge.categories.{cat_cfg.category}.meshes",
                    f"no mesh matches {pattern!r}")
        meshes = [(f.name, load_mesh(f, y_up=cfg.mesh_y_up)) for f in files]
        cats.append(ForgeCategory(
            category=cat_cfg.category,
            meshes=meshes,
            count=cat_cfg.count,
            scale_range=cat_cfg.scale_range,
            intensity=cat_cfg.intensity,
            intensity_noise=cat_cfg.intensity_noise,
            name=cat_cfg.name,
        ))
    return ForgePolicy(categories=cats, retry_cap=cfg.forge_retry_cap)
