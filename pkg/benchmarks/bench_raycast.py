#!/usr/bin/env python3
"""Benchmark the ray casting kernels: compiled core vs NumPy fallback,
brute force vs BVH, across mesh sizes and two ray patterns.

Usage: python benchmarks/bench_raycast.py [--rays N] [--quick]
"""

import argparse
import time

import numpy as np

from lidarforge import _kernels
from lidarforge._kernels import _numpy as np_kernels
from lidarforge.emission import LidarSpec, build_emission_grid
from lidarforge.geometry import TriangleMesh


def make_soup(rng, n_faces, spread=8.0):
    centers = rng.normal(0, spread, (n_faces, 3))
    tris = centers[:, None, :] + rng.normal(0, 0.5, (n_faces, 3, 3))
    return TriangleMesh.from_triangles(tris, drop_degenerate=True)


def run(label, fn, repeats=1):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--rays", type=int, default=100_000)
    parser.add_argument("--quick", action="store_true",
                        help="smaller meshes and ray counts")
    args = parser.parse_args()

    rng = np.random.default_rng(1)
    n_rays = 20_000 if args.quick else args.rays
    sizes = [500, 2000] if args.quick else [500, 5000, 20000]

    omni = rng.normal(size=(n_rays, 3))
    omni /= np.linalg.norm(omni, axis=1, keepdims=True)
    fan = build_emission_grid(LidarSpec(seed=1)).directions.reshape(-1, 3)[:n_rays]
    c = np.array([0.0, 0.0, 2.0])

    backends = [("numpy", np_kernels.cast_rays)]
    if _kernels.BACKEND == "cython":
        backends.insert(0, ("cython", _kernels.cast_rays))
    else:
        print("compiled core unavailable; benchmarking the fallback only")

    print(f"{n_rays} rays per case, best of 2 runs\n")
    header = f"{'mesh':>8} {'rays':>6} {'backend':>7} {'path':>6} {'time':>9} {'Mray/s':>8}"
    print(header)
    print("-" * len(header))

    for n_faces in sizes:
        mesh = make_soup(rng, n_faces)
        cast = mesh._cast
        bvh = _kernels.build_bvh(mesh.triangles)
        for ray_label, dirs in (("omni", omni), ("fan", fan)):
            reference = None
            for backend_label, cast_fn in backends:
                for path_label, bvh_arg in (("brute", None), ("bvh", bvh)):
                    if path_label == "brute" and n_faces * len(dirs) > 2e9:
                        continue  # avoid hour-long fallback brute runs
                    secs, (s, idx) = run(
                        f"{backend_label}-{path_label}",
                        lambda: cast_fn(c, dirs, cast, bvh_arg),
                        repeats=2)
                    rate = len(dirs) / secs / 1e6
                    print(f"{n_faces:>8} {ray_label:>6} {backend_label:>7} "
                          f"{path_label:>6} {secs:>8.3f}s {rate:>8.2f}")
                    if reference is None:
                        reference = (s, idx)
                    else:
                        assert np.array_equal(idx, reference[1]), "path mismatch"
        print()


if __name__ == "__main__":
    main()
