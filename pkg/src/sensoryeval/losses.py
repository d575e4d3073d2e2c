"""Regression error metrics, CIoU loss, and the grid-level detector loss."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .boxes import BoundingBox, ciou_terms
from .validation import ValidationError, check_finite

__all__ = [
    "ResidualRow",
    "ResidualTable",
    "YoloLossWeights",
    "regression_errors",
    "ciou_loss",
    "yolo_composite_loss",
]


@dataclass(frozen=True)
class ResidualRow:
    y: float
    y_hat: float
    residual: float
    abs_residual: float
    sq_residual: float


@dataclass(frozen=True)
class ResidualTable:
    """Per-observation residuals plus MAE/MSE/RMSE summary."""

    rows: tuple[ResidualRow, ...]
    mae: float
    mse: float
    rmse: float


def regression_errors(y: Sequence[float], y_hat: Sequence[float]) -> ResidualTable:
    """MAE, MSE and RMSE of predictions against targets.

    MAE = mean |y - y_hat|, MSE = mean (y - y_hat)^2, RMSE = sqrt(MSE).
    """
    y = [check_finite(v, "y") for v in y]
    y_hat = [check_finite(v, "y_hat") for v in y_hat]
    if len(y) != len(y_hat):
        raise ValidationError(
            f"length mismatch: {len(y)} targets vs {len(y_hat)} predictions")
    if not y:
        raise ValidationError("empty input")
    rows = []
    for yi, yh in zip(y, y_hat):
        r = yi - yh
        rows.append(ResidualRow(y=yi, y_hat=yh, residual=r,
                                abs_residual=abs(r), sq_residual=r * r))
    n = len(rows)
    mae = sum(row.abs_residual for row in rows) / n
    mse = sum(row.sq_residual for row in rows) / n
    return ResidualTable(rows=tuple(rows), mae=mae, mse=mse, rmse=math.sqrt(mse))


def ciou_loss(pred: BoundingBox, gt: BoundingBox) -> float:
    """1 - CIoU; zero iff the boxes coincide, bounded below by 0."""
    return 1.0 - ciou_terms(pred, gt).ciou


@dataclass(frozen=True)
class YoloLossWeights:
    """Per-term weights of the composite detector loss.

    The printed loss applies one uniform coordinate weight to all four
    terms; keeping them independently configurable also makes the
    classic variant (distinct coordinate/confidence/class weights)
    reachable.  Defaults follow the uniform printed form with weight 5.
    """

    coord: float = 5.0
    wh: float = 5.0
    conf: float = 5.0
    cls: float = 5.0

    def __post_init__(self):
        for name in ("coord", "wh", "conf", "cls"):
            v = check_finite(getattr(self, name), name)
            if v < 0:
                raise ValidationError(f"{name} must be >= 0, got {v}")
            object.__setattr__(self, name, v)


def yolo_composite_loss(preds: np.ndarray, targets: np.ndarray,
                        weights: YoloLossWeights = YoloLossWeights()) -> float:
    """Sum-of-squares detector loss over responsible grid cells.

    ``preds`` and ``targets`` are float arrays of shape (S^2, B, 5 + C)
    holding (x, y, w, h, confidence, class scores...) per cell and box.
    A (cell, box) slot is responsible iff its target confidence is
    positive; only responsible slots contribute.  The four terms are
    squared coordinate error, squared sqrt-width/height error, squared
    confidence error and squared class-score error, each scaled by its
    weight.
    """
    preds = np.asarray(preds, dtype=float)
    targets = np.asarray(targets, dtype=float)
    if preds.shape != targets.shape:
        raise ValidationError(
            f"shape mismatch: preds {preds.shape} vs targets {targets.shape}")
    if preds.ndim != 3 or preds.shape[2] < 5:
        raise ValidationError(
            f"expected shape (S^2, B, 5 + C) with C >= 0, got {preds.shape}")
    if np.any(preds[..., 2:4] < 0) or np.any(targets[..., 2:4] < 0):
        raise ValidationError("widths/heights must be non-negative (square roots)")

    obj = targets[..., 4] > 0
    if not np.any(obj):
        return 0.0
    p = preds[obj]
    t = targets[obj]
    coord = np.sum((p[:, 0] - t[:, 0]) ** 2 + (p[:, 1] - t[:, 1]) ** 2)
    wh = np.sum((np.sqrt(p[:, 2]) - np.sqrt(t[:, 2])) ** 2
                + (np.sqrt(p[:, 3]) - np.sqrt(t[:, 3])) ** 2)
    conf = np.sum((p[:, 4] - t[:, 4]) ** 2)
    cls = np.sum((p[:, 5:] - t[:, 5:]) ** 2)
    return float(weights.coord * coord + weights.wh * wh
                 + weights.conf * conf + weights.cls * cls)
