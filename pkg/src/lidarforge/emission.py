"""The sensor's emission pattern: a discretized spherical ray fan with
optional Gaussian angular jitter.

Direction convention, for azimuth theta and elevation phi:

    t = [cos(phi) sin(theta), cos(phi) cos(theta), sin(phi)]

so theta is measured from the +y axis toward +x (NOT from +x, as most LiDAR
tooling does) and phi is the angle above the horizontal plane, negative
pointing down. The azimuth lattice starts at -pi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Tuple

import numpy as np

DEG = math.pi / 180.0
_TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class LidarSpec:
    """Sensor pose and angular field/resolution/noise parameters.

    Defaults describe a roof-mounted 64-beam scanner: 360 degree horizontal
    field at 0.08 degree resolution, -27..0 degree vertical field at 0.4
    degree resolution, center at (0, 0, 2) m.
    """

    center: Tuple[float, float, float] = (0.0, 0.0, 2.0)
    azimuth_fov: float = _TWO_PI
    azimuth_res: float = 0.08 * DEG
    elevation_min: float = -27.0 * DEG
    elevation_max: float = 0.0
    elevation_res: float = 0.4 * DEG
    jitter_sigma: float = 0.01 * DEG
    seed: int = 0

    def __post_init__(self):
        if not self.azimuth_res > 0:
            raise ValueError("azimuth_res must be positive")
        if not self.elevation_res > 0:
            raise ValueError("elevation_res must be positive")
        if not self.elevation_min < self.elevation_max:
            raise ValueError("elevation_min must be below elevation_max")
        if self.jitter_sigma < 0:
            raise ValueError("jitter_sigma must be non-negative")
        if not 0 < self.azimuth_fov <= _TWO_PI + 1e-12:
            raise ValueError("azimuth_fov must be in (0, 2*pi]")
        object.__setattr__(self, "center", tuple(float(v) for v in self.center))

    @classmethod
    def from_config(cls, cfg: dict) -> "LidarSpec":
        """Build from a JSON config dict; angle keys are degrees."""
        kwargs = {}
        if "center" in cfg:
            kwargs["center"] = tuple(cfg["center"])
        for key, attr in [
            ("azimuth_fov_deg", "azimuth_fov"),
            ("azimuth_res_deg", "azimuth_res"),
            ("elevation_min_deg", "elevation_min"),
            ("elevation_max_deg", "elevation_max"),
            ("elevation_res_deg", "elevation_res"),
            ("jitter_sigma_deg", "jitter_sigma"),
        ]:
            if key in cfg:
                kwargs[attr] = float(cfg[key]) * DEG
        if "seed" in cfg:
            kwargs["seed"] = int(cfg["seed"])
        return cls(**kwargs)

    def to_config(self) -> dict:
        """Degree-keyed dict, inverse of from_config."""
        return {
            "center": list(self.center),
            "azimuth_fov_deg": self.azimuth_fov / DEG,
            "azimuth_res_deg": self.azimuth_res / DEG,
            "elevation_min_deg": self.elevation_min / DEG,
            "elevation_max_deg": self.elevation_max / DEG,
            "elevation_res_deg": self.elevation_res / DEG,
            "jitter_sigma_deg": self.jitter_sigma / DEG,
            "seed": self.seed,
        }

    def with_seed(self, seed: int) -> "LidarSpec":
        return replace(self, seed=int(seed))


@dataclass(frozen=True)
class EmissionGrid:
    """Row-major fan of emission directions.

    theta_lattice/phi_lattice hold the unperturbed lattice angles; theta/phi
    the jittered per-ray angles; directions the matching unit vectors.
    """

    theta_lattice: np.ndarray  # (cols,)
    phi_lattice: np.ndarray    # (rows,)
    theta: np.ndarray          # (rows, cols)
    phi: np.ndarray            # (rows, cols)
    directions: np.ndarray     # (rows, cols, 3)
    azimuth_res: float
    elevation_res: float

    @property
    def rows(self) -> int:
        return self.phi_lattice.shape[0]

    @property
    def cols(self) -> int:
        return self.theta_lattice.shape[0]

    @property
    def size(self) -> int:
        return self.rows * self.cols

    @cached_property
    def max_jitter(self) -> float:
        """Largest realized |jittered - lattice| angle, either axis."""
        if self.size == 0:
            return 0.0
        dt = np.abs(self.theta - self.theta_lattice[None, :]).max()
        dp = np.abs(self.phi - self.phi_lattice[:, None]).max()
        return float(max(dt, dp))


def _directions(theta: np.ndarray, phi: np.ndarray) -> np.ndarray:
    out = np.empty(theta.shape + (3,))
    cos_phi = np.cos(phi)
    out[..., 0] = cos_phi * np.sin(theta)
    out[..., 1] = cos_phi * np.cos(theta)
    out[..., 2] = np.sin(phi)
    return out


def build_emission_grid(spec: LidarSpec) -> EmissionGrid:
    """Create the ray fan for a sensor spec.

    cols = round(azimuth_fov / azimuth_res) azimuth steps starting at -pi;
    rows = floor((elevation_max - elevation_min) / elevation_res) + 1 steps
    starting at elevation_min. With jitter_sigma > 0 each angle is perturbed
    by independent zero-mean Gaussian noise, deterministic in spec.seed.
    """
    cols = int(round(spec.azimuth_fov / spec.azimuth_res))
    rows = int(math.floor((spec.elevation_max - spec.elevation_min)
                          / spec.elevation_res)) + 1
    theta_lat = -math.pi + np.arange(cols) * spec.azimuth_res
    phi_lat = spec.elevation_min + np.arange(rows) * spec.elevation_res
    theta = np.broadcast_to(theta_lat, (rows, cols)).copy()
    phi = np.broadcast_to(phi_lat[:, None], (rows, cols)).copy()
    if spec.jitter_sigma > 0:
        rng = np.random.default_rng(spec.seed)
        theta += rng.normal(0.0, spec.jitter_sigma, (rows, cols))
        phi += rng.normal(0.0, spec.jitter_sigma, (rows, cols))
    return EmissionGrid(
        theta_lattice=theta_lat,
        phi_lattice=phi_lat,
        theta=theta,
        phi=phi,
        directions=_directions(theta, phi),
        azimuth_res=spec.azimuth_res,
        elevation_res=spec.elevation_res,
    )


def _wrap(a: float) -> float:
    return (a + math.pi) % _TWO_PI - math.pi


def window_subgrid(grid: EmissionGrid, theta1: float, theta2: float,
                   phi1: float, phi2: float, *, pad_steps: int = 1,
                   margin: float = 0.0) -> EmissionGrid:
    """Rays whose lattice angles fall inside the closed intervals, padded by
    pad_steps resolution steps (plus margin radians) per side.

    theta1 > theta2 denotes an azimuth interval wrapping across +-pi. The
    result keeps row-major order; it is empty when the window misses the
    sensor field entirely.
    """
    pad_t = pad_steps * grid.azimuth_res + margin
    pad_p = pad_steps * grid.elevation_res + margin

    width = theta2 - theta1 if theta1 <= theta2 else theta2 - theta1 + _TWO_PI
    if width + 2.0 * pad_t >= _TWO_PI:
        col_mask = np.ones(grid.cols, dtype=bool)
    else:
        lo = _wrap(theta1 - pad_t)
        hi = _wrap(theta2 + pad_t)
        lat = grid.theta_lattice
        if lo <= hi:
            col_mask = (lat >= lo) & (lat <= hi)
        else:
            col_mask = (lat >= lo) | (lat <= hi)
    row_mask = (grid.phi_lattice >= phi1 - pad_p) & (grid.phi_lattice <= phi2 + pad_p)

    return EmissionGrid(
        theta_lattice=grid.theta_lattice[col_mask],
        phi_lattice=grid.phi_lattice[row_mask],
        theta=grid.theta[row_mask][:, col_mask],
        phi=grid.phi[row_mask][:, col_mask],
        directions=grid.directions[row_mask][:, col_mask],
        azimuth_res=grid.azimuth_res,
        elevation_res=grid.elevation_res,
    )
