"""Pure NumPy nearest-hit ray casting, used when the compiled core is absent.

The accelerated path filters rays through the BVH leaf boxes (leaf by leaf,
vectorized over all rays) before running the per-face test; the brute path
tests every face. Both share the same vectorized hit formula and the same
(s, face index) tie-break, so they agree bit for bit with each other and with
the compiled kernels.
"""

from __future__ import annotations

import numpy as np

from ._prep import Bvh, CastData, origin_terms

PARALLEL_EPS = 1e-12
MIN_RAY_PARAM = 1e-9
BARY_EPS = 1e-12

_CHUNK = 128  # keeps the (rays, faces) temporaries cache-resident
_NO_FACE = np.iinfo(np.int64).max


def _face_s(dirs, n, e1, e2, proj, a1, a2, d11, d12, d22, inv_det):
    """Ray parameter for every (ray, face) pair; -1 where there is no hit.

    Written with in-place updates to limit (rays, faces)-sized temporaries;
    every arithmetic step matches the compiled kernel's operand order (plus
    commutations, which are exact in IEEE arithmetic).
    """
    tx = dirs[:, 0:1]
    ty = dirs[:, 1:2]
    tz = dirs[:, 2:3]
    ndt = n[:, 0] * tx
    ndt += n[:, 1] * ty
    ndt += n[:, 2] * tz
    with np.errstate(divide="ignore", invalid="ignore"):
        s = proj / ndt
    d1 = e1[:, 0] * tx
    d1 += e1[:, 1] * ty
    d1 += e1[:, 2] * tz
    d1 *= s
    d1 += a1
    d2 = e2[:, 0] * tx
    d2 += e2[:, 1] * ty
    d2 += e2[:, 2] * tz
    d2 *= s
    d2 += a2
    u = d22 * d1
    u -= d12 * d2
    u *= inv_det
    v = d11 * d2
    v -= d12 * d1
    v *= inv_det
    np.abs(ndt, out=ndt)
    ok = ndt >= PARALLEL_EPS
    ok &= s > MIN_RAY_PARAM
    ok &= u > BARY_EPS
    ok &= v > BARY_EPS
    u += v
    ok &= u < 1.0 - BARY_EPS
    s[~ok] = np.inf
    return s


def _fold_best(s_cand, face_ids, best_s, best_idx):
    """Return (best_s, best_idx) updated with the candidates (misses are inf):
    smaller s wins, smaller face index breaks ties."""
    s_min = s_cand.min(axis=1)
    at_min = s_cand == s_min[:, None]
    idx_min = np.where(at_min, face_ids, _NO_FACE).min(axis=1)
    better = (s_min < best_s) | ((s_min == best_s) & (idx_min < best_idx))
    return np.where(better, s_min, best_s), np.where(better, idx_min, best_idx)


def _box_hits(c, dirs, bmin, bmax):
    """Closed-slab test of every ray against one box; True means possibly hit.

    Conservative by construction: NaNs from 0 * inf (origin exactly on a slab
    plane of a zero-component direction) resolve to "descend".
    """
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / dirs  # +-inf where a component is zero
        t1 = (bmin[None, :] - c) * inv
        t2 = (bmax[None, :] - c) * inv
    lo = np.minimum(t1, t2)
    hi = np.maximum(t1, t2)
    lo = np.where(np.isnan(lo), -np.inf, lo)
    hi = np.where(np.isnan(hi), np.inf, hi)
    tmin = np.maximum(lo.max(axis=1), 0.0)
    tmax = hi.min(axis=1)
    return tmax >= tmin


def cast_rays(c, dirs, cast: CastData, bvh: Bvh | None = None):
    """Nearest hit of rays from a common origin against the prepared mesh.

    Returns (s, idx): s[i] is the ray parameter of the nearest hit of ray i
    (-1.0 when it misses), idx[i] the original face index (-1 on miss).
    """
    c = np.asarray(c, dtype=np.float64).reshape(3)
    dirs = np.ascontiguousarray(dirs, dtype=np.float64).reshape(-1, 3)
    nrays = dirs.shape[0]
    proj, a1, a2 = origin_terms(cast, c)

    best_s = np.full(nrays, np.inf)
    best_idx = np.full(nrays, _NO_FACE, dtype=np.int64)

    if bvh is None:
        face_args = (cast.n, cast.e1, cast.e2, proj, a1, a2,
                     cast.d11, cast.d12, cast.d22, cast.inv_det)
        for lo in range(0, nrays, _CHUNK):
            sl = slice(lo, min(lo + _CHUNK, nrays))
            s_cand = _face_s(dirs[sl], *face_args)
            # all faces present in ascending order: argmin's first-occurrence
            # rule is exactly the lowest-face-index tie-break
            j = np.argmin(s_cand, axis=1)
            s_min = s_cand[np.arange(s_cand.shape[0]), j]
            best_s[sl] = s_min
            best_idx[sl] = np.where(np.isfinite(s_min), j, _NO_FACE)
    else:
        for leaf in range(bvh.leaf_start.shape[0]):
            rows = np.flatnonzero(
                _box_hits(c, dirs, bvh.leaf_min[leaf], bvh.leaf_max[leaf]))
            if rows.size == 0:
                continue
            f0 = bvh.leaf_start[leaf]
            faces = bvh.prim[f0:f0 + bvh.leaf_count[leaf]]
            s_cand = _face_s(
                dirs[rows],
                cast.n[faces], cast.e1[faces], cast.e2[faces],
                proj[faces], a1[faces], a2[faces],
                cast.d11[faces], cast.d12[faces], cast.d22[faces],
                cast.inv_det[faces],
            )
            best_s[rows], best_idx[rows] = _fold_best(
                s_cand, faces, best_s[rows], best_idx[rows])

    hit = np.isfinite(best_s)
    s_out = np.where(hit, best_s, -1.0)
    idx_out = np.where(hit, best_idx, -1).astype(np.int64)
    return s_out, idx_out
