"""Triangle-mesh geometry: ray/plane/triangle intersection, rigid transforms,
bounding boxes and angular windows.

Coordinates are meters, +z up. All operations are pure functions of immutable
inputs; meshes can be shared freely across threads. Azimuth is measured from
the +y axis toward +x (see `lidarforge.emission` for the direction convention).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple, Optional, Tuple

import numpy as np

from lidarforge import _kernels

PARALLEL_EPS = 1e-12     # |n.t| below this: ray parallel to the plane
MIN_RAY_PARAM = 1e-9     # hits at s <= this are behind or at the origin
BARY_EPS = 1e-12         # strict-interior margin of the containment test
DEGENERATE_AREA = 1e-12  # faces with area <= this (m^2) are degenerate

_TWO_PI = 2.0 * math.pi


class SensorInsideMeshError(ValueError):
    """The sensor origin lies inside a mesh AABB: the angular window is
    undefined and the caller must re-sample the placement."""


class AngularWindow(NamedTuple):
    """Azimuth and elevation intervals bounding a mesh as seen from a point.

    theta1 > theta2 means the azimuth interval wraps across the +-pi seam.
    """

    theta1: float
    theta2: float
    phi1: float
    phi2: float


@dataclass(frozen=True)
class RigidPose:
    """Mesh placement: optional x-mirror, uniform scale and yaw about the mesh
    centroid (in that order), followed by a translation. Yaw is normalized to
    [0, 2*pi)."""

    yaw: float = 0.0
    flip_x: bool = False
    scale: float = 1.0
    translation: Tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError(f"scale must be positive, got {self.scale}")
        object.__setattr__(self, "yaw", float(self.yaw) % _TWO_PI)
        tr = tuple(float(v) for v in self.translation)
        if len(tr) != 3:
            raise ValueError("translation must have three components")
        object.__setattr__(self, "translation", tr)


@dataclass(frozen=True)
class TriangleMesh:
    """Triangle soup with per-face unit normals and an exact AABB.

    triangles[f, k] is the k-th vertex of face f. Degenerate faces (area at
    or below DEGENERATE_AREA) are rejected at construction.
    """

    triangles: np.ndarray  # (F, 3, 3) float64
    normals: np.ndarray    # (F, 3) float64, unit
    aabb_min: np.ndarray   # (3,)
    aabb_max: np.ndarray   # (3,)

    @classmethod
    def from_triangles(cls, triangles, drop_degenerate: bool = False) -> "TriangleMesh":
        tris = np.ascontiguousarray(triangles, dtype=np.float64)
        if tris.ndim != 3 or tris.shape[1:] != (3, 3) or tris.shape[0] == 0:
            raise ValueError(f"expected non-empty (F, 3, 3) triangles, got {tris.shape}")
        cross = np.cross(tris[:, 1] - tris[:, 0], tris[:, 2] - tris[:, 0])
        norms = np.linalg.norm(cross, axis=1)
        area = 0.5 * norms
        degenerate = area <= DEGENERATE_AREA
        if degenerate.any():
            if not drop_degenerate:
                raise ValueError(
                    f"{int(degenerate.sum())} degenerate faces "
                    f"(area <= {DEGENERATE_AREA} m^2)")
            tris = tris[~degenerate]
            cross = cross[~degenerate]
            norms = norms[~degenerate]
            if tris.shape[0] == 0:
                raise ValueError("all faces degenerate")
        normals = cross / norms[:, None]
        verts = tris.reshape(-1, 3)
        return cls(
            triangles=tris,
            normals=np.ascontiguousarray(normals),
            aabb_min=verts.min(axis=0),
            aabb_max=verts.max(axis=0),
        )

    @property
    def num_faces(self) -> int:
        return self.triangles.shape[0]

    @cached_property
    def centroid(self) -> np.ndarray:
        """Mean of all face vertices; the rotation/flip/scale pivot."""
        return self.triangles.reshape(-1, 3).mean(axis=0)

    def face(self, index: int) -> np.ndarray:
        return self.triangles[index]

    def aabb_contains(self, point, pad: float = 0.0) -> bool:
        p = np.asarray(point, dtype=np.float64)
        return bool(np.all(p >= self.aabb_min - pad) and np.all(p <= self.aabb_max + pad))

    # cast data and BVH are derived lazily and cached; both are immutable
    @cached_property
    def _cast(self) -> _kernels.CastData:
        return _kernels.prepare_cast_data(self.triangles, self.normals)

    @cached_property
    def _bvh(self) -> Optional[_kernels.Bvh]:
        if self.num_faces < 32:
            return None
        return _kernels.build_bvh(self.triangles)


def face_normal(face) -> np.ndarray:
    """Unit normal of a (3, 3) face; raises on degenerate faces."""
    face = np.asarray(face, dtype=np.float64)
    n = np.cross(face[1] - face[0], face[2] - face[0])
    norm = np.linalg.norm(n)
    if 0.5 * norm <= DEGENERATE_AREA:
        raise ValueError("degenerate face")
    return n / norm


def ray_plane_intersect(c, t, face, normal=None):
    """Intersection of the ray c + s*t with the supporting plane of a face.

    Returns (p, s) with p = c + s*t, or None when the ray is parallel to the
    plane (|n.t| < 1e-12) or the intersection lies behind or at the origin
    (s <= 1e-9).
    """
    c = np.asarray(c, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    assert abs(np.linalg.norm(t) - 1.0) < 1e-9, "ray direction must be unit length"
    face = np.asarray(face, dtype=np.float64)
    n = face_normal(face) if normal is None else np.asarray(normal, dtype=np.float64)
    ndt = float(n @ t)
    if abs(ndt) < PARALLEL_EPS:
        return None
    s = float(n @ (face[0] - c)) / ndt
    if s <= MIN_RAY_PARAM:
        return None
    return c + s * t, s


def barycentric_coords(p, face) -> Tuple[float, float]:
    """Solve p = q + u*(m - q) + v*(n - q) for the face vertices (q, m, n).

    p is assumed to lie in the face plane (least-squares solve otherwise).
    """
    face = np.asarray(face, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    e1 = face[1] - face[0]
    e2 = face[2] - face[0]
    d = p - face[0]
    d11 = float(e1 @ e1)
    d12 = float(e1 @ e2)
    d22 = float(e2 @ e2)
    det = d11 * d22 - d12 * d12
    d1 = float(e1 @ d)
    d2 = float(e2 @ d)
    u = (d22 * d1 - d12 * d2) / det
    v = (d11 * d2 - d12 * d1) / det
    return u, v


def point_in_triangle(p, face):
    """Barycentric containment: (u, v) iff u > 0, v > 0, u + v < 1, strictly.

    Boundary points (equalities within 1e-12) count as outside. Returns None
    for points outside the open triangle.
    """
    u, v = barycentric_coords(p, face)
    if u > BARY_EPS and v > BARY_EPS and u + v < 1.0 - BARY_EPS:
        return u, v
    return None


def cast_rays(c, dirs, mesh: TriangleMesh, brute_force: bool = False):
    """Nearest hit of many rays from origin c against the mesh.

    Returns (s, idx): ray parameter and face index per ray, -1 on miss. With
    brute_force=True every face is tested; otherwise the cached acceleration
    structure is used. Both give identical results.
    """
    bvh = None if brute_force else mesh._bvh
    return _kernels.cast_rays(c, dirs, mesh._cast, bvh)


def ray_mesh_intersect(c, t, mesh: TriangleMesh, brute_force: bool = False):
    """First surface the ray c + s*t reaches: (p, s, face_index) or None.

    Among all faces passing the plane intersection and the strict containment
    test, the hit with minimal s wins (lowest face index on exact ties).
    """
    c = np.asarray(c, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    assert abs(np.linalg.norm(t) - 1.0) < 1e-9, "ray direction must be unit length"
    s_arr, idx_arr = cast_rays(c, t.reshape(1, 3), mesh, brute_force=brute_force)
    if idx_arr[0] < 0:
        return None
    s = float(s_arr[0])
    return c + s * t, s, int(idx_arr[0])


def transform_mesh(mesh: TriangleMesh, pose: RigidPose) -> TriangleMesh:
    """Apply a pose: flip, scale and yaw about the mesh centroid, then
    translate. Normals and the AABB are recomputed."""
    if not pose.scale > 0:
        raise ValueError(f"scale must be positive, got {pose.scale}")
    centroid = mesh.centroid
    v = mesh.triangles.reshape(-1, 3) - centroid
    if pose.flip_x:
        v = v * np.array([-1.0, 1.0, 1.0])
    v = v * pose.scale
    cy = math.cos(pose.yaw)
    sy = math.sin(pose.yaw)
    rot = np.empty_like(v)
    rot[:, 0] = cy * v[:, 0] - sy * v[:, 1]
    rot[:, 1] = sy * v[:, 0] + cy * v[:, 1]
    rot[:, 2] = v[:, 2]
    rot += centroid + np.asarray(pose.translation, dtype=np.float64)
    return TriangleMesh.from_triangles(rot.reshape(mesh.triangles.shape))


def _wrap_angle(a: float) -> float:
    """Normalize an angle to [-pi, pi)."""
    return (a + math.pi) % _TWO_PI - math.pi


def mesh_angular_window(mesh: TriangleMesh, c) -> AngularWindow:
    """Azimuth/elevation intervals from c that contain every direction toward
    the mesh AABB (hence every direction that can hit the mesh).

    The azimuth interval is the bearing hull of the AABB's xy-corners (the
    full circle when c is above or below the footprint); the elevation
    interval uses monotone bounds in height and horizontal distance, which
    makes it conservative for the whole box rather than just its corners.
    """
    c = np.asarray(c, dtype=np.float64)
    if mesh.aabb_contains(c):
        raise SensorInsideMeshError(
            "sensor center inside the mesh AABB; angular window undefined")

    lo = mesh.aabb_min - c
    hi = mesh.aabb_max - c

    # azimuth from the +y axis: atan2(dx, dy)
    if lo[0] <= 0.0 <= hi[0] and lo[1] <= 0.0 <= hi[1]:
        theta1, theta2 = -math.pi, math.pi  # directly above/below: full circle
    else:
        bearings = sorted(
            math.atan2(dx, dy)
            for dx in (lo[0], hi[0])
            for dy in (lo[1], hi[1])
        )
        gaps = [bearings[i + 1] - bearings[i] for i in range(3)]
        gaps.append(bearings[0] + _TWO_PI - bearings[3])
        k = max(range(4), key=gaps.__getitem__)
        theta1 = bearings[(k + 1) % 4]
        theta2 = bearings[k]

    # closest / farthest horizontal distance from c to the xy-rectangle
    dx_out = max(lo[0], 0.0, -hi[0])
    dy_out = max(lo[1], 0.0, -hi[1])
    r_min = math.hypot(dx_out, dy_out)
    r_max = max(
        math.hypot(dx, dy)
        for dx in (lo[0], hi[0])
        for dy in (lo[1], hi[1])
    )
    phi_hi = math.atan2(hi[2], r_min if hi[2] >= 0.0 else r_max)
    phi_lo = math.atan2(lo[2], r_max if lo[2] >= 0.0 else r_min)
    return AngularWindow(theta1, theta2, phi_lo, phi_hi)


def box_mesh(center=(0.0, 0.0, 0.0), size=1.0) -> TriangleMesh:
    """Axis-aligned box as 12 triangles; size is a scalar or per-axis triple."""
    center = np.asarray(center, dtype=np.float64)
    half = 0.5 * np.broadcast_to(np.asarray(size, dtype=np.float64), (3,))
    corners = np.array([
        [sx, sy, sz]
        for sx in (-half[0], half[0])
        for sy in (-half[1], half[1])
        for sz in (-half[2], half[2])
    ]) + center
    # corner index bit layout: x * 4 + y * 2 + z
    quads = [
        (0, 1, 3, 2),  # -x
        (4, 6, 7, 5),  # +x
        (0, 4, 5, 1),  # -y
        (2, 3, 7, 6),  # +y
        (0, 2, 6, 4),  # -z
        (1, 5, 7, 3),  # +z
    ]
    tris = []
    for a, b, cc, d in quads:
        tris.append(corners[[a, b, cc]])
        tris.append(corners[[a, cc, d]])
    return TriangleMesh.from_triangles(np.array(tris))
