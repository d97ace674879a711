"""Pixel confusion-matrix accumulation and mIoU.

Rows are ground truth, columns are predictions. Ignore-labeled pixels
contribute nothing; merging two matrices is elementwise addition, so
per-image matrices can be reduced in any order.
"""

from __future__ import annotations

import numpy as np


class ConfusionMatrix:
    def __init__(self, num_classes: int, counts: np.ndarray | None = None):
        if num_classes < 1:
            raise ValueError("need at least one class")
        self.num_classes = num_classes
        if counts is None:
            counts = np.zeros((num_classes, num_classes), dtype=np.int64)
        counts = np.asarray(counts, dtype=np.int64)
        if counts.shape != (num_classes, num_classes):
            raise ValueError(f"counts shape {counts.shape} != ({num_classes}, {num_classes})")
        if (counts < 0).any():
            raise ValueError("confusion counts must be non-negative")
        self.counts = counts

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        if other.num_classes != self.num_classes:
            raise ValueError("cannot merge matrices with different class counts")
        return ConfusionMatrix(self.num_classes, self.counts + other.counts)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, ConfusionMatrix)
            and self.num_classes == other.num_classes
            and np.array_equal(self.counts, other.counts)
        )

    def total(self) -> int:
        return int(self.counts.sum())


def accumulate_confusion(
    cm: ConfusionMatrix,
    pred_label: np.ndarray,
    gt_label: np.ndarray,
    ignore_index: int = 255,
) -> ConfusionMatrix:
    """Return cm plus the per-pixel (gt, pred) counts of one image pair."""
    pred_label = np.asarray(pred_label)
    gt_label = np.asarray(gt_label)
    if pred_label.shape != gt_label.shape:
        raise ValueError(
            f"prediction shape {pred_label.shape} != ground-truth shape {gt_label.shape}"
        )
    k = cm.num_classes
    valid = gt_label != ignore_index
    gt = gt_label[valid].astype(np.int64)
    pred = pred_label[valid].astype(np.int64)
    if gt.size and ((gt < 0) | (gt >= k)).any():
        raise ValueError(f"ground-truth labels outside [0, {k}) and not ignore")
    if pred.size and ((pred < 0) | (pred >= k)).any():
        raise ValueError(f"predicted labels outside [0, {k})")
    update = np.bincount(gt * k + pred, minlength=k * k).reshape(k, k)
    return ConfusionMatrix(k, cm.counts + update)


def compute_miou(cm: ConfusionMatrix) -> tuple[np.ndarray, float]:
    """Per-class IoU and their mean; zero-union classes are excluded from the mean."""
    counts = cm.counts.astype(np.float64)
    diag = np.diag(counts)
    union = counts.sum(axis=1) + counts.sum(axis=0) - diag
    evaluable = union > 0
    if not evaluable.any():
        raise ValueError("no evaluable class: every class has zero union")
    iou = np.full(cm.num_classes, np.nan)
    iou[evaluable] = diag[evaluable] / union[evaluable]
    return iou, float(iou[evaluable].mean())
