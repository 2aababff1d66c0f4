import math

import numpy as np
import pytest

from lidarforge.geometry import (
    RigidPose,
    SensorInsideMeshError,
    TriangleMesh,
    box_mesh,
    cast_rays,
    face_normal,
    mesh_angular_window,
    point_in_triangle,
    ray_mesh_intersect,
    ray_plane_intersect,
    transform_mesh,
)

from conftest import random_soup, unit_directions


def _plane_face(axis, offset):
    """A big triangle in the plane {axis}=offset."""
    if axis == 0:
        return np.array([[offset, -50, -50], [offset, 50, -50], [offset, 0, 50.0]])
    if axis == 1:
        return np.array([[-50, offset, -50], [50, offset, -50], [0, offset, 50.0]])
    return np.array([[-50.0, -50, offset], [50, -50, offset], [0, 50, offset]])


class TestRayPlane:
    def test_axis_aligned(self):
        face = _plane_face(0, 5.0)
        p, s = ray_plane_intersect((0, 0, 0), (1, 0, 0), face)
        assert s == pytest.approx(5.0, abs=1e-12)
        np.testing.assert_allclose(p, [5, 0, 0], atol=1e-12)

    def test_sensor_height_ray(self):
        face = _plane_face(1, 10.0)
        p, s = ray_plane_intersect((0, 0, 2), (0, 1, 0), face)
        assert s == pytest.approx(10.0, abs=1e-12)
        np.testing.assert_allclose(p, [0, 10, 2], atol=1e-12)

    def test_parallel_is_none(self):
        face = _plane_face(2, 5.0)
        assert ray_plane_intersect((0, 0, 0), (1, 0, 0), face) is None

    def test_behind_origin_is_none(self):
        face = _plane_face(0, -5.0)
        assert ray_plane_intersect((0, 0, 0), (1, 0, 0), face) is None

    def test_random_residuals(self, rng):
        # oracle: the plane equation itself
        for _ in range(2000):
            face = rng.normal(0, 5, (3, 3))
            try:
                n = face_normal(face)
            except ValueError:
                continue
            c = rng.normal(0, 5, 3)
            t = unit_directions(rng, 1)[0]
            res = ray_plane_intersect(c, t, face, normal=n)
            if res is None:
                continue
            p, s = res
            assert abs(n @ (p - face[0])) <= 1e-9
            assert np.linalg.norm(p - (c + s * t)) <= 1e-12


class TestPointInTriangle:
    TRI = np.array([[0.0, 0, 0], [1, 0, 0], [0, 1, 0]])

    def test_inside(self):
        u, v = point_in_triangle((0.25, 0.25, 0.0), self.TRI)
        assert (u, v) == pytest.approx((0.25, 0.25), abs=1e-12)

    def test_outside_hypotenuse(self):
        assert point_in_triangle((0.6, 0.6, 0.0), self.TRI) is None

    def test_vertex_and_edge_are_outside(self):
        assert point_in_triangle((0.0, 0.0, 0.0), self.TRI) is None
        assert point_in_triangle((0.5, 0.0, 0.0), self.TRI) is None

    def test_forward_construction(self, rng):
        # construct interior points from (u, v) drawn in the open simplex
        for _ in range(500):
            face = rng.normal(0, 3, (3, 3))
            try:
                face_normal(face)
            except ValueError:
                continue
            u = rng.uniform(0.01, 0.98)
            v = rng.uniform(0.01, 0.99 - u)
            p = face[0] + u * (face[1] - face[0]) + v * (face[2] - face[0])
            got = point_in_triangle(p, face)
            assert got is not None
            assert got == pytest.approx((u, v), abs=1e-9)

    def test_rigid_invariance(self, rng):
        # the inside/outside verdict only depends on relative geometry
        for _ in range(300):
            face = rng.normal(0, 2, (3, 3))
            try:
                face_normal(face)
            except ValueError:
                continue
            u, v = rng.uniform(-0.5, 1.5, 2)
            p = face[0] + u * (face[1] - face[0]) + v * (face[2] - face[0])
            before = point_in_triangle(p, face) is not None

            yaw, pitch = rng.uniform(0, 2 * math.pi, 2)
            cz, sz = math.cos(yaw), math.sin(yaw)
            cx, sx = math.cos(pitch), math.sin(pitch)
            rot = np.array([[cz, -sz, 0], [sz, cz, 0], [0, 0, 1.0]]) @ \
                np.array([[1.0, 0, 0], [0, cx, -sx], [0, sx, cx]])
            shift = rng.normal(0, 10, 3)
            after = point_in_triangle(rot @ p + shift, (rot @ face.T).T + shift)
            assert (after is not None) == before


class TestRayMesh:
    def test_nearest_face_of_cube(self):
        # off the quad diagonal: exact boundary points are outside by contract
        cube = box_mesh((10, 0.3, 0.2), 2.0)
        p, s, idx = ray_mesh_intersect((0, 0, 0), (1, 0, 0), cube)
        assert s == pytest.approx(9.0, abs=1e-12)  # near face, never the far one
        np.testing.assert_allclose(p, [9, 0, 0], atol=1e-12)

    def test_miss_is_none(self):
        cube = box_mesh((10, 0, 0), 2.0)
        assert ray_mesh_intersect((0, 0, 0), (0, 0, 1), cube) is None

    def test_accelerated_equals_brute(self, rng):
        mesh = random_soup(rng, 600)
        dirs = unit_directions(rng, 5000)
        s_b, i_b = cast_rays((0.0, 0.0, 2.0), dirs, mesh, brute_force=True)
        s_a, i_a = cast_rays((0.0, 0.0, 2.0), dirs, mesh, brute_force=False)
        assert np.array_equal(i_b, i_a)
        assert np.array_equal(s_b, s_a)

    def test_nearest_hit_monotone_under_face_removal(self, rng):
        mesh = random_soup(rng, 80, spread=3.0)
        c = np.array([0.0, 0.0, 2.0])
        for t in unit_directions(rng, 50):
            res = ray_mesh_intersect(c, t, mesh)
            if res is None:
                continue
            p, s, idx = res
            for drop in rng.choice(mesh.num_faces, size=5, replace=False):
                if drop == idx:
                    continue
                keep = np.arange(mesh.num_faces) != drop
                sub = TriangleMesh.from_triangles(mesh.triangles[keep])
                res2 = ray_mesh_intersect(c, t, sub)
                assert res2 is not None
                assert res2[1] == s


class TestTransform:
    def test_identity(self, rng):
        mesh = random_soup(rng, 50)
        out = transform_mesh(mesh, RigidPose())
        np.testing.assert_allclose(out.triangles, mesh.triangles, atol=1e-12)

    def test_yaw_pi(self):
        tri = np.array([[[1.0, 0, 0], [0, 1, 0], [0, 0, 1]]])
        mesh = TriangleMesh.from_triangles(tri - tri.reshape(-1, 3).mean(0))
        out = transform_mesh(mesh, RigidPose(yaw=math.pi))
        v_in = mesh.triangles.reshape(-1, 3)
        v_out = out.triangles.reshape(-1, 3)
        np.testing.assert_allclose(v_out[:, 0], -v_in[:, 0], atol=1e-12)
        np.testing.assert_allclose(v_out[:, 1], -v_in[:, 1], atol=1e-12)
        np.testing.assert_allclose(v_out[:, 2], v_in[:, 2], atol=1e-12)

    def test_yaw_composition(self, rng):
        mesh = random_soup(rng, 40)
        a, b = rng.uniform(0, math.pi, 2)
        twice = transform_mesh(transform_mesh(mesh, RigidPose(yaw=a)), RigidPose(yaw=b))
        once = transform_mesh(mesh, RigidPose(yaw=a + b))
        np.testing.assert_allclose(twice.triangles, once.triangles, atol=1e-9)

    def test_scale_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            RigidPose(scale=0.0)
        with pytest.raises(ValueError):
            RigidPose(scale=-1.0)

    def test_flip_mirrors_about_centroid(self, rng):
        mesh = random_soup(rng, 30)
        out = transform_mesh(mesh, RigidPose(flip_x=True))
        cen = mesh.centroid
        v_in = mesh.triangles.reshape(-1, 3)
        v_out = out.triangles.reshape(-1, 3)
        np.testing.assert_allclose(v_out[:, 0] - cen[0], -(v_in[:, 0] - cen[0]), atol=1e-12)
        np.testing.assert_allclose(v_out[:, 1:], v_in[:, 1:], atol=1e-12)

    def test_aabb_exact(self, rng):
        mesh = random_soup(rng, 60)
        verts = mesh.triangles.reshape(-1, 3)
        np.testing.assert_array_equal(mesh.aabb_min, verts.min(0))
        np.testing.assert_array_equal(mesh.aabb_max, verts.max(0))

    def test_degenerate_faces_rejected(self):
        bad = np.zeros((1, 3, 3))
        with pytest.raises(ValueError):
            TriangleMesh.from_triangles(bad)


class TestAngularWindow:
    def test_cube_half_width(self):
        # unit cube centered at (10, 0, 0) seen from (0, 0, 2)
        cube = box_mesh((10.0, 0.0, 0.0), 1.0)
        win = mesh_angular_window(cube, (0.0, 0.0, 2.0))
        half = math.degrees(math.atan(0.5 / 9.5))
        # +x bearing is theta = pi/2 in the from-+y convention
        assert math.degrees(win.theta1) == pytest.approx(90 - half, abs=1e-9)
        assert math.degrees(win.theta2) == pytest.approx(90 + half, abs=1e-9)

    def test_symmetric_about_plus_y(self):
        cube = box_mesh((0.0, 12.0, 0.0), 2.0)
        win = mesh_angular_window(cube, (0.0, 0.0, 2.0))
        assert win.theta1 == pytest.approx(-win.theta2, abs=1e-12)

    def test_sensor_inside_rejected(self):
        cube = box_mesh((0.0, 0.0, 2.0), 4.0)
        with pytest.raises(SensorInsideMeshError):
            mesh_angular_window(cube, (0.0, 0.0, 2.0))

    def test_rays_outside_window_miss(self, rng):
        # brute-force oracle: no ray outside the (unpadded) window may hit
        c = np.array([0.0, 0.0, 2.0])
        for _ in range(100):
            center = rng.uniform(-30, 30, 3)
            if np.linalg.norm(center[:2]) < 5:
                continue
            mesh = random_soup(rng, 40, center=center, spread=1.0, tri_size=0.4)
            if mesh.aabb_contains(c):
                continue
            win = mesh_angular_window(mesh, c)
            dirs = unit_directions(rng, 400)
            theta = np.arctan2(dirs[:, 0], dirs[:, 1])
            phi = np.arctan2(dirs[:, 2], np.hypot(dirs[:, 0], dirs[:, 1]))
            if win.theta1 <= win.theta2:
                in_az = (theta >= win.theta1) & (theta <= win.theta2)
            else:
                in_az = (theta >= win.theta1) | (theta <= win.theta2)
            inside = in_az & (phi >= win.phi1) & (phi <= win.phi2)
            s, idx = cast_rays(c, dirs[~inside], mesh, brute_force=True)
            assert not (idx >= 0).any()
