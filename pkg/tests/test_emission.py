import math

import numpy as np
import pytest

from lidarforge.emission import DEG, LidarSpec, build_emission_grid, window_subgrid


class TestBuildGrid:
    def test_default_dimensions(self):
        grid = build_emission_grid(LidarSpec())
        assert grid.cols == 4500  # 360 / 0.08
        assert grid.rows == 68    # floor(27 / 0.4) + 1

    def test_unit_norm(self):
        grid = build_emission_grid(LidarSpec(seed=3))
        norms = np.linalg.norm(grid.directions, axis=-1)
        assert np.abs(norms - 1.0).max() <= 1e-12

    def test_no_jitter_on_lattice_and_deterministic(self):
        spec = LidarSpec(jitter_sigma=0.0)
        g1 = build_emission_grid(spec)
        g2 = build_emission_grid(spec)
        np.testing.assert_array_equal(g1.theta, np.broadcast_to(g1.theta_lattice, g1.theta.shape))
        np.testing.assert_array_equal(g1.phi, np.broadcast_to(g1.phi_lattice[:, None], g1.phi.shape))
        np.testing.assert_array_equal(g1.directions, g2.directions)
        assert g1.max_jitter == 0.0

    def test_seed_fixes_grid(self):
        g1 = build_emission_grid(LidarSpec(seed=11))
        g2 = build_emission_grid(LidarSpec(seed=11))
        g3 = build_emission_grid(LidarSpec(seed=12))
        np.testing.assert_array_equal(g1.directions, g2.directions)
        assert not np.array_equal(g1.directions, g3.directions)

    def test_paper_direction_convention(self):
        # t = [cos(phi) sin(theta), cos(phi) cos(theta), sin(phi)]
        grid = build_emission_grid(LidarSpec(jitter_sigma=0.0))
        r, c = 5, 123
        theta = grid.theta_lattice[c]
        phi = grid.phi_lattice[r]
        expected = [math.cos(phi) * math.sin(theta),
                    math.cos(phi) * math.cos(theta),
                    math.sin(phi)]
        np.testing.assert_allclose(grid.directions[r, c], expected, atol=0)

    def test_monotone_lattice(self):
        grid = build_emission_grid(LidarSpec())
        assert (np.diff(grid.theta_lattice) > 0).all()
        assert (np.diff(grid.phi_lattice) > 0).all()

    def test_jitter_sigma_recovered(self):
        # statistical check on the generator: >= 1e6 angle samples
        spec = LidarSpec(elevation_res=0.2 * DEG, seed=5)
        grid = build_emission_grid(spec)
        assert grid.size * 2 >= 1_000_000
        dev_t = (grid.theta - grid.theta_lattice[None, :]).ravel()
        dev_p = (grid.phi - grid.phi_lattice[:, None]).ravel()
        dev = np.concatenate([dev_t, dev_p])
        assert dev.std() == pytest.approx(spec.jitter_sigma, rel=0.02)

    def test_invalid_specs_rejected(self):
        with pytest.raises(ValueError):
            LidarSpec(azimuth_res=0.0)
        with pytest.raises(ValueError):
            LidarSpec(elevation_min=0.0, elevation_max=-0.1)
        with pytest.raises(ValueError):
            LidarSpec(jitter_sigma=-1.0)

    def test_config_round_trip(self):
        spec = LidarSpec(center=(1, 2, 3), azimuth_res=0.1 * DEG, seed=9)
        again = LidarSpec.from_config(spec.to_config())
        assert again == spec


class TestWindowSubgrid:
    def test_full_field_is_identity(self):
        grid = build_emission_grid(LidarSpec(seed=2))
        sub = window_subgrid(grid, -math.pi, math.pi,
                             grid.phi_lattice[0], grid.phi_lattice[-1])
        np.testing.assert_array_equal(sub.directions, grid.directions)
        np.testing.assert_array_equal(sub.theta_lattice, grid.theta_lattice)

    def test_small_window_ray_count(self):
        # window of width 3 steps, generic offset: <= 5x5 rays after padding
        grid = build_emission_grid(LidarSpec(seed=2))
        t0 = grid.theta_lattice[1000] + 0.37 * grid.azimuth_res
        p0 = grid.phi_lattice[20] + 0.29 * grid.elevation_res
        sub = window_subgrid(grid, t0, t0 + 3 * grid.azimuth_res,
                             p0, p0 + 3 * grid.elevation_res)
        assert sub.cols <= 5
        assert sub.rows <= 5
        assert sub.size > 0

    def test_wrapping_window_contains_seam(self):
        grid = build_emission_grid(LidarSpec(seed=2))
        sub = window_subgrid(grid, math.radians(175), math.radians(-175), -0.1, 0.0)
        # the +-180 degree column is theta_lattice[0] = -pi
        assert np.isclose(sub.theta_lattice, -math.pi).any()
        assert (np.abs(np.degrees(sub.theta_lattice)) >= 174.9).all()

    def test_partition_covers_grid_without_duplicates(self):
        grid = build_emission_grid(LidarSpec(seed=4))
        # partition the circle at generic (off-lattice) boundaries
        cuts = np.array([-3.0, -1.2, 0.1, 1.7, 2.9])
        phi_lo, phi_hi = grid.phi_lattice[0], grid.phi_lattice[-1]
        cols = []
        for k in range(len(cuts)):
            a, b = cuts[k], cuts[(k + 1) % len(cuts)]
            sub = window_subgrid(grid, a, b, phi_lo, phi_hi, pad_steps=0)
            assert sub.rows == grid.rows
            cols.extend(sub.theta_lattice.tolist())
        assert len(cols) == grid.cols
        np.testing.assert_allclose(sorted(cols), grid.theta_lattice, atol=0)

    def test_window_below_horizon_is_empty(self):
        grid = build_emission_grid(LidarSpec(seed=2))
        sub = window_subgrid(grid, -0.1, 0.1, math.radians(-60), math.radians(-50))
        assert sub.size == 0
