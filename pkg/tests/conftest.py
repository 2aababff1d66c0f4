import numpy as np
import pytest

from lidarforge.geometry import TriangleMesh, box_mesh


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_soup(rng, n_faces, center=(0.0, 0.0, 0.0), spread=8.0, tri_size=0.5):
    """Random triangle soup scattered around a center point."""
    centers = np.asarray(center) + rng.normal(0, spread, (n_faces, 3))
    tris = centers[:, None, :] + rng.normal(0, tri_size, (n_faces, 3, 3))
    return TriangleMesh.from_triangles(tris, drop_degenerate=True)


def random_blob(rng, n_faces, center, radius=1.0):
    """Closed-ish random convex blob: triangles on a sphere around center."""
    dirs = rng.normal(size=(n_faces, 3))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    anchors = np.asarray(center) + radius * dirs
    tris = anchors[:, None, :] + rng.normal(0, 0.25 * radius, (n_faces, 3, 3))
    return TriangleMesh.from_triangles(tris, drop_degenerate=True)


def unit_directions(rng, n):
    d = rng.normal(size=(n, 3))
    return d / np.linalg.norm(d, axis=1, keepdims=True)


@pytest.fixture
def cube_at_10():
    return box_mesh((10.0, 0.0, 0.5), 1.0)
