"""Precomputed per-mesh arrays shared by the compiled and NumPy cast kernels.

Both backends consume the exact same float64 inputs so that a hit decided by
one backend is decided identically by the other.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class CastData:
    """Per-face quantities for the ray cast: v0, edges, unit normal and the
    Gram-matrix terms of the barycentric solve."""

    q: np.ndarray        # (F, 3) first vertex of each face
    e1: np.ndarray       # (F, 3) v1 - v0
    e2: np.ndarray       # (F, 3) v2 - v0
    n: np.ndarray        # (F, 3) unit normals
    d11: np.ndarray      # (F,) e1.e1
    d12: np.ndarray      # (F,) e1.e2
    d22: np.ndarray      # (F,) e2.e2
    inv_det: np.ndarray  # (F,) 1 / (d11*d22 - d12^2)

    @property
    def num_faces(self) -> int:
        return self.q.shape[0]


def prepare_cast_data(triangles: np.ndarray, normals: np.ndarray) -> CastData:
    """Build CastData from (F, 3, 3) triangles and (F, 3) unit normals."""
    tris = np.ascontiguousarray(triangles, dtype=np.float64)
    q = np.ascontiguousarray(tris[:, 0])
    e1 = np.ascontiguousarray(tris[:, 1] - tris[:, 0])
    e2 = np.ascontiguousarray(tris[:, 2] - tris[:, 0])
    n = np.ascontiguousarray(normals, dtype=np.float64)
    d11 = e1[:, 0] * e1[:, 0] + e1[:, 1] * e1[:, 1] + e1[:, 2] * e1[:, 2]
    d12 = e1[:, 0] * e2[:, 0] + e1[:, 1] * e2[:, 1] + e1[:, 2] * e2[:, 2]
    d22 = e2[:, 0] * e2[:, 0] + e2[:, 1] * e2[:, 1] + e2[:, 2] * e2[:, 2]
    det = d11 * d22 - d12 * d12
    return CastData(q, e1, e2, n, d11, d12, d22, 1.0 / det)


def origin_terms(cast: CastData, c: np.ndarray):
    """Per-face terms depending only on the ray origin: proj = n.(q - c),
    a1 = e1.(c - q), a2 = e2.(c - q)."""
    cx, cy, cz = float(c[0]), float(c[1]), float(c[2])
    q, e1, e2, n = cast.q, cast.e1, cast.e2, cast.n
    dqx = q[:, 0] - cx
    dqy = q[:, 1] - cy
    dqz = q[:, 2] - cz
    proj = n[:, 0] * dqx + n[:, 1] * dqy + n[:, 2] * dqz
    a1 = -(e1[:, 0] * dqx + e1[:, 1] * dqy + e1[:, 2] * dqz)
    a2 = -(e2[:, 0] * dqx + e2[:, 1] * dqy + e2[:, 2] * dqz)
    return proj, a1, a2


@dataclass(frozen=True)
class Bvh:
    """Median-split bounding volume hierarchy in flat arrays.

    Internal nodes: left/right are child indices, count == 0. Leaves:
    prim[start : start + count] are the original face indices. The leaf_*
    arrays are coarsened groups of consecutive leaves (exact face bounds),
    sized for the vectorized NumPy traversal.
    """

    node_min: np.ndarray    # (M, 3)
    node_max: np.ndarray    # (M, 3)
    left: np.ndarray        # (M,) int64
    right: np.ndarray       # (M,) int64
    start: np.ndarray       # (M,) int64
    count: np.ndarray       # (M,) int64
    prim: np.ndarray        # (F,) int64 permuted face indices
    leaf_min: np.ndarray    # (L, 3)
    leaf_max: np.ndarray    # (L, 3)
    leaf_start: np.ndarray  # (L,) int64
    leaf_count: np.ndarray  # (L,) int64


def build_bvh(triangles: np.ndarray, leaf_size: int = 16) -> Bvh:
    """Median-split BVH over face centroids; boxes are exact face bounds."""
    tris = np.asarray(triangles, dtype=np.float64)
    nfaces = tris.shape[0]
    fmin = tris.min(axis=1)
    fmax = tris.max(axis=1)
    centers = tris.mean(axis=1)
    prim = np.arange(nfaces, dtype=np.int64)

    node_min, node_max = [], []
    left, right, start, count, span = [], [], [], [], []

    def build(lo: int, hi: int) -> int:
        idx = len(node_min)
        sel = prim[lo:hi]
        node_min.append(fmin[sel].min(axis=0))
        node_max.append(fmax[sel].max(axis=0))
        left.append(-1)
        right.append(-1)
        start.append(lo)
        count.append(hi - lo)
        span.append(hi - lo)
        if hi - lo > leaf_size:
            cen = centers[sel]
            axis = int(np.argmax(cen.max(axis=0) - cen.min(axis=0)))
            order = np.argsort(cen[:, axis], kind="stable")
            prim[lo:hi] = sel[order]
            mid = (lo + hi) // 2
            count[idx] = 0
            left[idx] = build(lo, mid)
            right[idx] = build(mid, hi)
        return idx

    import sys

    limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(limit, 10_000))
    try:
        build(0, nfaces)
    finally:
        sys.setrecursionlimit(limit)

    count_arr = np.asarray(count, dtype=np.int64)
    start_arr = np.asarray(start, dtype=np.int64)
    nmin = np.ascontiguousarray(node_min, dtype=np.float64)
    nmax = np.ascontiguousarray(node_max, dtype=np.float64)

    # coarse groups for the NumPy leaf-major pass: subtrees of <= ~64 faces,
    # so boxes stay spatially tight and prim ranges contiguous
    group_target = max(4 * leaf_size, 64)
    g_min, g_max, g_start, g_count = [], [], [], []
    todo = [0]
    while todo:
        node = todo.pop()
        if span[node] <= group_target or count[node] > 0:
            g_min.append(node_min[node])
            g_max.append(node_max[node])
            g_start.append(start[node])
            g_count.append(span[node])
        else:
            todo.append(right[node])
            todo.append(left[node])

    return Bvh(
        node_min=nmin,
        node_max=nmax,
        left=np.asarray(left, dtype=np.int64),
        right=np.asarray(right, dtype=np.int64),
        start=start_arr,
        count=count_arr,
        prim=np.ascontiguousarray(prim),
        leaf_min=np.ascontiguousarray(g_min, dtype=np.float64),
        leaf_max=np.ascontiguousarray(g_max, dtype=np.float64),
        leaf_start=np.asarray(g_start, dtype=np.int64),
        leaf_count=np.asarray(g_count, dtype=np.int64),
    )
