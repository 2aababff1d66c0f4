"""Ray casting kernels with a compiled core and a NumPy fallback.

The compiled extension is preferred when importable; set LIDARFORGE_PURE_PYTHON=1
to force the NumPy path. `BACKEND` names the active implementation. Both
backends produce identical results (same hit predicates, same tie-breaks).
"""

from __future__ import annotations

import importlib
import os

import numpy as np

from ._prep import Bvh, CastData, build_bvh, origin_terms, prepare_cast_data
from . import _numpy

_core = None
if os.environ.get("LIDARFORGE_PURE_PYTHON", "") in ("", "0"):
    try:
        _core = importlib.import_module("._core", __package__)
    except ImportError:
        _core = None

BACKEND = "cython" if _core is not None else "numpy"

__all__ = [
    "BACKEND",
    "Bvh",
    "CastData",
    "build_bvh",
    "cast_rays",
    "prepare_cast_data",
]


def cast_rays(c, dirs, cast: CastData, bvh: Bvh | None = None):
    """Nearest hit of rays from a common origin c against the prepared mesh.

    Returns (s, idx) float64/int64 arrays; -1 entries mark misses. Passing a
    BVH only accelerates the search, it never changes the result.
    """
    if _core is None:
        return _numpy.cast_rays(c, dirs, cast, bvh)

    c = np.ascontiguousarray(c, dtype=np.float64).reshape(3)
    dirs = np.ascontiguousarray(dirs, dtype=np.float64).reshape(-1, 3)
    proj, a1, a2 = origin_terms(cast, c)
    out_s = np.empty(dirs.shape[0], dtype=np.float64)
    out_idx = np.empty(dirs.shape[0], dtype=np.int64)
    face_args = (cast.n, cast.e1, cast.e2,
                 np.ascontiguousarray(proj), np.ascontiguousarray(a1),
                 np.ascontiguousarray(a2),
                 np.ascontiguousarray(cast.d11), np.ascontiguousarray(cast.d12),
                 np.ascontiguousarray(cast.d22), np.ascontiguousarray(cast.inv_det))
    if bvh is None:
        _core.cast_brute(c, dirs, *face_args, out_s, out_idx)
    else:
        _core.cast_bvh(c, dirs, *face_args,
                       bvh.node_min, bvh.node_max, bvh.left, bvh.right,
                       bvh.start, bvh.count, bvh.prim, out_s, out_idx)
    return out_s, out_idx
