"""Mesh ingestion (Wavefront OBJ, ASCII/binary PLY) and colored PLY export.

Meshes are triangulated on load (quads and larger polygons fan-triangulated),
materials and extra attributes ignored. Units are meters, +z up; y-up meshes
are converted with the y_up flag. Degenerate faces are dropped with a warning.
"""

from __future__ import annotations

import warnings
from pathlib import Path

import numpy as np

from lidarforge.geometry import TriangleMesh


class MeshFormatError(ValueError):
    pass


def _finalize(vertices: np.ndarray, faces: list, path, y_up: bool) -> TriangleMesh:
    if not faces:
        raise MeshFormatError(f"{path}: no faces")
    if y_up:
        vertices = vertices[:, [0, 2, 1]] * np.array([1.0, -1.0, 1.0])
    idx = np.asarray(faces, dtype=np.int64)
    if idx.min() < 0 or idx.max() >= vertices.shape[0]:
        raise MeshFormatError(f"{path}: face index out of range")
    tris = vertices[idx]
    mesh = TriangleMesh.from_triangles(tris, drop_degenerate=True)
    dropped = tris.shape[0] - mesh.num_faces
    if dropped:
        warnings.warn(f"{path}: dropped {dropped} degenerate faces")
    return mesh


def _fan(indices: list) -> list:
    return [(indices[0], indices[k], indices[k + 1]) for k in range(1, len(indices) - 1)]


def load_obj(path, y_up: bool = False) -> TriangleMesh:
    """Wavefront OBJ loader: v/f records only, negative indices supported."""
    path = Path(path)
    vertices = []
    faces = []
    with path.open("r", errors="replace") as fh:
        for line in fh:
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            if parts[0] == "v":
                vertices.append([float(x) for x in parts[1:4]])
            elif parts[0] == "f":
                idx = []
                for token in parts[1:]:
                    raw = int(token.split("/")[0])
                    idx.append(raw - 1 if raw > 0 else len(vertices) + raw)
                if len(idx) < 3:
                    raise MeshFormatError(f"{path}: face with {len(idx)} vertices")
                faces.extend(_fan(idx))
    if not vertices:
        raise MeshFormatError(f"{path}: no vertices")
    return _finalize(np.asarray(vertices, dtype=np.float64), faces, path, y_up)


_PLY_TYPES = {
    "char": "i1", "int8": "i1",
    "uchar": "u1", "uint8": "u1",
    "short": "i2", "int16": "i2",
    "ushort": "u2", "uint16": "u2",
    "int": "i4", "int32": "i4",
    "uint": "u4", "uint32": "u4",
    "float": "f4", "float32": "f4",
    "double": "f8", "float64": "f8",
}


def load_ply(path, y_up: bool = False) -> TriangleMesh:
    """PLY loader for ascii and binary_little_endian triangle meshes."""
    path = Path(path)
    with path.open("rb") as fh:
        if fh.readline().strip() != b"ply":
            raise MeshFormatError(f"{path}: not a PLY file")
        fmt = None
        elements = []  # (name, count, [(prop_name, dtype, list_count_dtype|None)])
        while True:
            line = fh.readline()
            if not line:
                raise MeshFormatError(f"{path}: truncated header")
            tokens = line.decode("ascii", errors="replace").split()
            if not tokens or tokens[0] == "comment":
                continue
            if tokens[0] == "format":
                fmt = tokens[1]
            elif tokens[0] == "element":
                elements.append((tokens[1], int(tokens[2]), []))
            elif tokens[0] == "property":
                if tokens[1] == "list":
                    elements[-1][2].append((tokens[4], _PLY_TYPES[tokens[3]],
                                            _PLY_TYPES[tokens[2]]))
                else:
                    elements[-1][2].append((tokens[2], _PLY_TYPES[tokens[1]], None))
            elif tokens[0] == "end_header":
                break
        if fmt not in ("ascii", "binary_little_endian"):
            raise MeshFormatError(f"{path}: unsupported PLY format {fmt}")

        vertices = None
        faces = []
        for name, count, props in elements:
            if fmt == "ascii":
                rows = [fh.readline().split() for _ in range(count)]
                if name == "vertex":
                    cols = {p[0]: k for k, p in enumerate(props)}
                    vertices = np.array(
                        [[float(r[cols["x"]]), float(r[cols["y"]]), float(r[cols["z"]])]
                         for r in rows])
                elif name == "face":
                    for r in rows:
                        n = int(r[0])
                        faces.extend(_fan([int(x) for x in r[1:1 + n]]))
            else:
                if name == "vertex":
                    dtype = np.dtype([(p[0], "<" + p[1]) for p in props])
                    data = np.frombuffer(fh.read(dtype.itemsize * count), dtype=dtype)
                    vertices = np.stack(
                        [data["x"], data["y"], data["z"]], axis=1).astype(np.float64)
                elif name == "face":
                    list_prop = props[0]
                    cnt_t = np.dtype("<" + list_prop[2])
                    idx_t = np.dtype("<" + list_prop[1])
                    for _ in range(count):
                        n = int(np.frombuffer(fh.read(cnt_t.itemsize), dtype=cnt_t)[0])
                        idx = np.frombuffer(fh.read(idx_t.itemsize * n), dtype=idx_t)
                        faces.extend(_fan([int(x) for x in idx]))
                else:
                    # skip unknown fixed-width elements
                    width = sum(np.dtype(p[1]).itemsize for p in props if p[2] is None)
                    fh.read(width * count)
    if vertices is None:
        raise MeshFormatError(f"{path}: no vertex element")
    return _finalize(vertices, faces, path, y_up)


def load_mesh(path, y_up: bool = False) -> TriangleMesh:
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".obj":
        return load_obj(path, y_up=y_up)
    if suffix == ".ply":
        return load_ply(path, y_up=y_up)
    raise MeshFormatError(f"{path}: unsupported mesh format {suffix!r}")


def write_ply_points(path, xyz: np.ndarray, rgb: np.ndarray | None = None) -> None:
    """Binary little-endian point PLY: float32 xyz plus uchar RGB."""
    path = Path(path)
    xyz = np.ascontiguousarray(xyz, dtype="<f4").reshape(-1, 3)
    n = xyz.shape[0]
    if rgb is None:
        rgb = np.full((n, 3), 200, dtype=np.uint8)
    rgb = np.ascontiguousarray(rgb, dtype=np.uint8).reshape(-1, 3)
    if rgb.shape[0] != n:
        raise ValueError(f"{n} points but {rgb.shape[0]} colors")
    header = (
        "ply\n"
        "format binary_little_endian 1.0\n"
        f"element vertex {n}\n"
        "property float x\nproperty float y\nproperty float z\n"
        "property uchar red\nproperty uchar green\nproperty uchar blue\n"
        "end_header\n"
    )
    rec = np.empty(n, dtype=np.dtype([("xyz", "<f4", 3), ("rgb", "u1", 3)]))
    rec["xyz"] = xyz
    rec["rgb"] = rgb
    with path.open("wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(rec.tobytes())
