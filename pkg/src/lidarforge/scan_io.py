"""Bit-exact readers and writers for the on-disk scan formats.

Point files are consecutive little-endian float32 quadruples (x, y, z,
intensity); label files are little-endian uint32 words with the semantic id
in the lower 16 bits and the instance id in the upper 16.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

POINT_RECORD_BYTES = 16


class ScanFormatError(ValueError):
    """A scan or label file violates the on-disk format."""


@dataclass
class LabeledScan:
    """One frame: (N, 4) float32 points and N uint32 label words."""

    points: np.ndarray
    labels: np.ndarray
    frame_id: str = ""

    def __post_init__(self):
        self.points = np.ascontiguousarray(self.points, dtype=np.float32).reshape(-1, 4)
        self.labels = np.ascontiguousarray(self.labels, dtype=np.uint32).reshape(-1)
        if self.points.shape[0] != self.labels.shape[0]:
            raise ScanFormatError(
                f"{self.frame_id}: {self.points.shape[0]} points vs "
                f"{self.labels.shape[0]} labels")

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def semantic(self) -> np.ndarray:
        return (self.labels & np.uint32(0xFFFF)).astype(np.uint32)

    @property
    def instance(self) -> np.ndarray:
        return (self.labels >> np.uint32(16)).astype(np.uint32)


def pack_label(semantic, instance=0):
    """Combine semantic (low 16 bits) and instance (high 16) into a word."""
    return (np.uint32(instance) << np.uint32(16)) | (np.uint32(semantic) & np.uint32(0xFFFF))


def split_label(word):
    """Return (semantic, instance) from a 32-bit label word."""
    word = np.uint32(word)
    return int(word & np.uint32(0xFFFF)), int(word >> np.uint32(16))


def read_points(path) -> np.ndarray:
    path = Path(path)
    raw = np.fromfile(path, dtype=np.uint8)
    if raw.size % POINT_RECORD_BYTES != 0:
        raise ScanFormatError(
            f"{path}: size {raw.size} not a multiple of {POINT_RECORD_BYTES} "
            f"(trailing {raw.size % POINT_RECORD_BYTES} bytes at offset "
            f"{raw.size - raw.size % POINT_RECORD_BYTES})")
    pts = raw.view("<f4").reshape(-1, 4)
    bad = ~np.isfinite(pts)
    if bad.any():
        i, j = np.argwhere(bad)[0]
        raise ScanFormatError(
            f"{path}: non-finite float at point {i} field {j} "
            f"(byte offset {i * POINT_RECORD_BYTES + j * 4})")
    return pts


def read_labels(path) -> np.ndarray:
    return np.fromfile(Path(path), dtype="<u4")


def read_scan(point_path, label_path=None, frame_id: str | None = None) -> LabeledScan:
    """Load a point file and its label file into a LabeledScan.

    Without a label file every point gets label 0 (unlabeled).
    """
    point_path = Path(point_path)
    pts = read_points(point_path)
    if label_path is None:
        labels = np.zeros(pts.shape[0], dtype=np.uint32)
    else:
        labels = read_labels(label_path)
        if labels.shape[0] != pts.shape[0]:
            raise ScanFormatError(
                f"{point_path}: {pts.shape[0]} points but "
                f"{label_path} has {labels.shape[0]} labels")
    return LabeledScan(pts, labels, frame_id or point_path.stem)


def write_scan(scan: LabeledScan, point_path, label_path=None) -> None:
    """Write the scan back out; write(read(x)) is the byte identity."""
    pts = np.ascontiguousarray(scan.points, dtype="<f4")
    pts.tofile(Path(point_path))
    if label_path is not None:
        np.ascontiguousarray(scan.labels, dtype="<u4").tofile(Path(label_path))
