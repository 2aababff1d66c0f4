"""Segmentation metrics: confusion matrices and per-class / mean IoU."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from lidarforge.scan_io import read_labels


def confusion_matrix(pred, gt, class_ids=None):
    """Integer confusion counts, prediction x ground truth.

    class_ids fixes the class order; by default it is the sorted union of ids
    observed in either array. With an explicit list, points whose ground truth
    is not listed are ignored; a prediction outside the list on an evaluated
    point is an error.

    Returns (cm, class_ids) with cm[i, j] = count(pred == class i, gt == class j).
    """
    pred = np.asarray(pred).reshape(-1).astype(np.int64)
    gt = np.asarray(gt).reshape(-1).astype(np.int64)
    if pred.shape != gt.shape:
        raise ValueError(f"{pred.shape[0]} predictions vs {gt.shape[0]} labels")
    if class_ids is None:
        class_ids = np.union1d(np.unique(pred), np.unique(gt))
    class_ids = np.asarray(sorted(int(c) for c in class_ids), dtype=np.int64)
    ncls = class_ids.shape[0]
    lut_size = int(class_ids.max()) + 2 if ncls else 1
    lut = np.full(lut_size, -1, dtype=np.int64)
    lut[class_ids] = np.arange(ncls)

    gi = lut[np.clip(gt, 0, lut_size - 1)]
    gi[gt >= lut_size] = -1
    keep = gi >= 0
    pk = pred[keep]
    pi = lut[np.clip(pk, 0, lut_size - 1)]
    pi[pk >= lut_size] = -1
    if (pi < 0).any():
        bad = int(pk[pi < 0][0])
        raise ValueError(f"prediction id {bad} not in the class list")
    cm = np.bincount(pi * ncls + gi[keep], minlength=ncls * ncls)
    return cm.reshape(ncls, ncls).astype(np.int64), class_ids


def miou(cm):
    """Per-class IoU and its mean from a prediction x ground-truth matrix.

    IoU_i = cm[i, i] / (row_i + col_i - cm[i, i]). Classes never predicted and
    never present (empty union) are NaN and excluded from the mean; if every
    class is undefined this raises.
    """
    cm = np.asarray(cm, dtype=np.float64)
    if cm.ndim != 2 or cm.shape[0] != cm.shape[1] or cm.shape[0] < 1:
        raise ValueError(f"confusion matrix must be square, got {cm.shape}")
    inter = np.diag(cm)
    union = cm.sum(axis=0) + cm.sum(axis=1) - inter
    defined = union > 0
    if not defined.any():
        raise ValueError("all classes undefined (no predictions, no ground truth)")
    iou = np.full(cm.shape[0], np.nan)
    iou[defined] = inter[defined] / union[defined]
    return iou, float(iou[defined].mean())


def evaluate_label_dirs(pred_dir, gt_dir, class_ids=None):
    """Accumulate a confusion matrix over paired .label files.

    Files are matched by name; a prediction file missing for a ground-truth
    file (or vice versa) is an error. Returns (cm, class_ids).
    """
    pred_dir = Path(pred_dir)
    gt_dir = Path(gt_dir)
    gt_files = sorted(gt_dir.glob("*.label"))
    if not gt_files:
        raise FileNotFoundError(f"no .label files in {gt_dir}")
    pred_names = {p.name for p in pred_dir.glob("*.label")}
    missing = [f.name for f in gt_files if f.name not in pred_names]
    if missing:
        raise FileNotFoundError(f"predictions missing for {missing[:5]}")

    pairs = []
    for gt_file in gt_files:
        gt_sem = read_labels(gt_file) & np.uint32(0xFFFF)
        pred_sem = read_labels(pred_dir / gt_file.name) & np.uint32(0xFFFF)
        if gt_sem.shape != pred_sem.shape:
            raise ValueError(
                f"{gt_file.name}: {gt_sem.shape[0]} labels vs "
                f"{pred_sem.shape[0]} predictions")
        pairs.append((pred_sem, gt_sem))

    if class_ids is None:
        observed = np.zeros(0, dtype=np.int64)
        for pred_sem, gt_sem in pairs:
            observed = np.union1d(observed, np.union1d(np.unique(pred_sem),
                                                       np.unique(gt_sem)))
        class_ids = observed

    total = None
    for pred_sem, gt_sem in pairs:
        cm, class_ids = confusion_matrix(pred_sem, gt_sem, class_ids)
        total = cm if total is None else total + cm
    return total, class_ids
