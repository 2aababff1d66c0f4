# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled nearest-hit ray casting: brute force over all faces and a
stack-based BVH traversal. Hit predicates and tie-breaking match the NumPy
fallback exactly (same formulas, same operand order, no FP contraction)."""

from libc.math cimport INFINITY, fabs

cdef double PARALLEL_EPS = 1e-12
cdef double MIN_RAY_PARAM = 1e-9
cdef double BARY_EPS = 1e-12

DEF STACK_MAX = 128


cdef inline double _face_s(double tx, double ty, double tz,
                           const double* n, const double* e1, const double* e2,
                           double proj, double a1, double a2,
                           double d11, double d12, double d22,
                           double inv_det) noexcept nogil:
    """Ray parameter of the hit on one face, or -1.0 for a miss."""
    cdef double ndt = n[0] * tx + n[1] * ty + n[2] * tz
    if fabs(ndt) < PARALLEL_EPS:
        return -1.0
    cdef double s = proj / ndt
    if s <= MIN_RAY_PARAM:
        return -1.0
    cdef double b1 = e1[0] * tx + e1[1] * ty + e1[2] * tz
    cdef double b2 = e2[0] * tx + e2[1] * ty + e2[2] * tz
    cdef double d1 = a1 + s * b1
    cdef double d2 = a2 + s * b2
    cdef double u = (d22 * d1 - d12 * d2) * inv_det
    if u <= BARY_EPS:
        return -1.0
    cdef double v = (d11 * d2 - d12 * d1) * inv_det
    if v <= BARY_EPS:
        return -1.0
    if u + v >= 1.0 - BARY_EPS:
        return -1.0
    return s


cdef inline bint _box_hit(const double* bmin, const double* bmax,
                          double cx, double cy, double cz,
                          double tx, double ty, double tz,
                          double s_limit) noexcept nogil:
    """Closed-slab test against the box, restricted to s in [0, s_limit]."""
    cdef double lo = 0.0
    cdef double hi = s_limit
    cdef double o, d, t1, t2, tmp
    cdef int axis
    for axis in range(3):
        if axis == 0:
            o = cx; d = tx
        elif axis == 1:
            o = cy; d = ty
        else:
            o = cz; d = tz
        if d == 0.0:
            if o < bmin[axis] or o > bmax[axis]:
                return False
        else:
            t1 = (bmin[axis] - o) / d
            t2 = (bmax[axis] - o) / d
            if t1 > t2:
                tmp = t1; t1 = t2; t2 = tmp
            if t1 > lo:
                lo = t1
            if t2 < hi:
                hi = t2
            if lo > hi:
                return False
    return True


def cast_brute(const double[::1] origin, const double[:, ::1] dirs,
               const double[:, ::1] n, const double[:, ::1] e1,
               const double[:, ::1] e2,
               const double[::1] proj, const double[::1] a1,
               const double[::1] a2,
               const double[::1] d11, const double[::1] d12,
               const double[::1] d22, const double[::1] inv_det,
               double[::1] out_s, long long[::1] out_idx):
    """Nearest hit per ray by testing every face in index order."""
    cdef Py_ssize_t nrays = dirs.shape[0]
    cdef Py_ssize_t nfaces = n.shape[0]
    cdef Py_ssize_t i, j
    cdef double tx, ty, tz, s, best
    cdef long long bidx
    with nogil:
        for i in range(nrays):
            tx = dirs[i, 0]; ty = dirs[i, 1]; tz = dirs[i, 2]
            best = INFINITY
            bidx = -1
            for j in range(nfaces):
                s = _face_s(tx, ty, tz, &n[j, 0], &e1[j, 0], &e2[j, 0],
                            proj[j], a1[j], a2[j], d11[j], d12[j], d22[j],
                            inv_det[j])
                if s >= 0.0 and s < best:
                    best = s
                    bidx = j
            out_s[i] = best if bidx >= 0 else -1.0
            out_idx[i] = bidx


def cast_bvh(const double[::1] origin, const double[:, ::1] dirs,
             const double[:, ::1] n, const double[:, ::1] e1,
             const double[:, ::1] e2,
             const double[::1] proj, const double[::1] a1,
             const double[::1] a2,
             const double[::1] d11, const double[::1] d12,
             const double[::1] d22, const double[::1] inv_det,
             const double[:, ::1] node_min, const double[:, ::1] node_max,
             const long long[::1] left, const long long[::1] right,
             const long long[::1] start, const long long[::1] count,
             const long long[::1] prim,
             double[::1] out_s, long long[::1] out_idx):
    """Nearest hit per ray via BVH traversal; result identical to cast_brute."""
    cdef Py_ssize_t nrays = dirs.shape[0]
    cdef double cx = origin[0], cy = origin[1], cz = origin[2]
    cdef Py_ssize_t i
    cdef long long stack[STACK_MAX]
    cdef int sp
    cdef long long node, k, j
    cdef double tx, ty, tz, s, best
    cdef long long bidx
    with nogil:
        for i in range(nrays):
            tx = dirs[i, 0]; ty = dirs[i, 1]; tz = dirs[i, 2]
            best = INFINITY
            bidx = -1
            sp = 0
            stack[sp] = 0
            sp += 1
            while sp > 0:
                sp -= 1
                node = stack[sp]
                if not _box_hit(&node_min[node, 0], &node_max[node, 0],
                                cx, cy, cz, tx, ty, tz, best):
                    continue
                if count[node] > 0:
                    for k in range(start[node], start[node] + count[node]):
                        j = prim[k]
                        s = _face_s(tx, ty, tz, &n[j, 0], &e1[j, 0], &e2[j, 0],
                                    proj[j], a1[j], a2[j],
                                    d11[j], d12[j], d22[j], inv_det[j])
                        if s >= 0.0 and (s < best or (s == best and j < bidx)):
                            best = s
                            bidx = j
                else:
                    if sp + 2 > STACK_MAX:
                        with gil:
                            raise RuntimeError("BVH traversal stack overflow")
                    stack[sp] = right[node]
                    sp += 1
                    stack[sp] = left[node]
                    sp += 1
            out_s[i] = best if bidx >= 0 else -1.0
            out_idx[i] = bidx
