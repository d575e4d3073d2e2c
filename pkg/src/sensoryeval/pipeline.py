"""Detect -> filter -> crop -> regress -> level orchestration and reports.

The flagship flow: a detector proposes boxes, detections of the target
category are cropped from the original-resolution image and scored by
the regressor, everything else is reported without an index.
"""

from __future__ import annotations

import io
import time
from dataclasses import dataclass

import numpy as np

from . import boxes as boxes_mod
from . import model as model_mod
from .boxes import BoundingBox
from .detector import Detector, DetectorReport
from .hedonic import AcceptabilityResult
from .losses import ResidualTable
from .model import EvalReport, RegressorHandle, TrainHistory
from .validation import ValidationError, check_image8

__all__ = [
    "PipelineItem",
    "PipelineResult",
    "run_pipeline",
    "render_report",
]


@dataclass(frozen=True)
class PipelineItem:
    """One detected object; acceptability only for the target category."""

    category: str
    confidence: float
    box: BoundingBox  # normalized center format
    acceptability: AcceptabilityResult | None


@dataclass(frozen=True)
class PipelineResult:
    items: tuple[PipelineItem, ...]
    image_width: int
    image_height: int
    target_category: str
    elapsed_seconds: float


def run_pipeline(image: np.ndarray, detector: Detector,
                 regressor: RegressorHandle, target_category: str = "guava",
                 key: str | None = None) -> PipelineResult:
    """Detect objects and score every target-category detection.

    Each target detection is cropped from the original-resolution image
    via :func:`sensoryeval.boxes.crop` and scored with
    :func:`sensoryeval.model.predict_index`; other categories are
    reported without an index.
    """
    check_image8(image, "image")
    start = time.perf_counter()
    h, w = image.shape[:2]
    items = []
    for det in detector.detect(image, key=key):
        acceptability = None
        if det.category == target_category:
            region = boxes_mod.crop(image, det.box.to_pixels(w, h))
            acceptability = model_mod.predict_index(regressor, region)
        items.append(PipelineItem(category=det.category,
                                  confidence=det.confidence,
                                  box=det.box, acceptability=acceptability))
    return PipelineResult(items=tuple(items), image_width=w, image_height=h,
                          target_category=target_category,
                          elapsed_seconds=time.perf_counter() - start)


# ---------------------------------------------------------------------------
# Report rendering
#
# Conventions shared by all reports: metrics (precision, recall, F1,
# MAE columns) at 2 decimals, losses at 3 decimals, acceptability
# indices at 2 decimals, overlap ratios as percentages at 2 decimals.
# Residual-table summaries trim trailing zeros ("MAE : 2.4").


def _fmt2(v: float) -> str:
    return f"{v:.2f}"


def _fmt3(v: float) -> str:
    return f"{v:.3f}"


def _fmt_pct(v: float) -> str:
    return f"{100.0 * v:.2f}%"


def _fmt_trim(v: float) -> str:
    s = f"{v:.2f}".rstrip("0").rstrip(".")
    return s if s else "0"


def _text_table(header: list[str], rows: list[list[str]]) -> str:
    widths = [len(h) for h in header]
    for row in rows:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    lines = ["  ".join(h.ljust(w) for h, w in zip(header, widths)).rstrip()]
    for row in rows:
        lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip())
    return "\n".join(lines)


def _csv_table(header: list[str], rows: list[list[str]]) -> str:
    out = io.StringIO()
    out.write(",".join(header) + "\n")
    for row in rows:
        out.write(",".join(row) + "\n")
    return out.getvalue().rstrip("\n")


def _render_residuals(table: ResidualTable, fmt: str) -> str:
    header = ["observation", "y", "y_hat", "residual", "abs_residual",
              "sq_residual"]
    rows = []
    for i, row in enumerate(table.rows, start=1):
        rows.append([str(i), _fmt_trim(row.y), _fmt_trim(row.y_hat),
                     _fmt_trim(row.residual), _fmt_trim(row.abs_residual),
                     _fmt_trim(row.sq_residual)])
    sum_abs = sum(r.abs_residual for r in table.rows)
    sum_sq = sum(r.sq_residual for r in table.rows)
    summary = (f"MAE : {_fmt_trim(table.mae)}  MSE : {_fmt_trim(table.mse)}  "
               f"RMSE : {_fmt_trim(table.rmse)}")
    if fmt == "csv":
        body = _csv_table(header, rows)
        return (body + f"\nsum,,,,{_fmt_trim(sum_abs)},{_fmt_trim(sum_sq)}"
                + f"\nmae,mse,rmse\n{_fmt_trim(table.mae)},"
                  f"{_fmt_trim(table.mse)},{_fmt_trim(table.rmse)}")
    rows.append(["sum", "", "", "", _fmt_trim(sum_abs), _fmt_trim(sum_sq)])
    return _text_table(header, rows) + "\n" + summary


def _render_detector_report(report: DetectorReport, fmt: str) -> str:
    header = ["TP", "FP", "FN", "Average IoU", f"mAP@{report.iou_thresh:g}",
              "Precision", "Recall", "F1 Score"]
    row = [str(report.tp), str(report.fp), str(report.fn),
           _fmt_pct(report.average_iou), _fmt_pct(report.map_score),
           _fmt2(report.precision), _fmt2(report.recall), _fmt2(report.f1)]
    if fmt == "csv":
        return _csv_table(header, [row])
    return _text_table(header, [row])


def _render_history(history: TrainHistory, fmt: str, label: str | None) -> str:
    name = label or history.phase
    last = history.epochs[-1]
    header = ["Network", "Epochs", "Train loss", "Test loss",
              "Best test loss", "MAE"]
    row = [name, str(len(history.epochs)), _fmt3(last.train_loss),
           _fmt3(last.val_loss), _fmt3(history.best_val_loss),
           _fmt2(last.val_mae)]
    epoch_header = ["epoch", "train_loss", "val_loss", "val_mae"]
    epoch_rows = [[str(i), _fmt3(e.train_loss), _fmt3(e.val_loss),
                   _fmt2(e.val_mae)]
                  for i, e in enumerate(history.epochs, start=1)]
    if fmt == "csv":
        return (_csv_table(header, [row]) + "\n\n"
                + _csv_table(epoch_header, epoch_rows))
    return (_text_table(header, [row])
            + f"\nstop reason: {history.stop_reason} "
              f"(best epoch {history.best_epoch})\n\n"
            + _text_table(epoch_header, epoch_rows))


def _render_pipeline_result(result: PipelineResult, fmt: str) -> str:
    header = ["category", "confidence", "bx", "by", "bw", "bh", "index", "level"]
    rows = []
    for item in result.items:
        if item.acceptability is not None:
            index = _fmt2(item.acceptability.index)
            level = item.acceptability.level
        else:
            index, level = "-", "-"
        rows.append([item.category, _fmt2(item.confidence),
                     f"{item.box.bx:.4f}", f"{item.box.by:.4f}",
                     f"{item.box.bw:.4f}", f"{item.box.bh:.4f}", index, level])
    if fmt == "csv":
        return _csv_table(header, rows)
    title = (f"image {result.image_width}x{result.image_height}, "
             f"target category: {result.target_category}, "
             f"{len(result.items)} detection(s)")
    return title + "\n" + _text_table(header, rows)


def _render_eval_report(report: EvalReport, fmt: str) -> str:
    # A large index error can still land in the right level band (and a
    # small one can straddle a cut), so both columns are shown.
    from .hedonic import level_for

    header = ["image_path", "truth", "prediction", "abs_error", "level",
              "level_match"]
    rows = []
    for r in report.rows:
        match = "match" if level_for(r.truth) == r.level else "mismatch"
        rows.append([r.image_path, _fmt2(r.truth), _fmt2(r.prediction),
                     _fmt2(abs(r.prediction - r.truth)), r.level, match])
    if fmt == "csv":
        return _csv_table(header, rows) + f"\nmae\n{_fmt2(report.mae)}"
    body = _text_table(header, rows) + f"\nMAE : {_fmt_trim(report.mae)}"
    if report.errors:
        body += "\n" + "\n".join(f"error: {path}: {msg}"
                                 for path, msg in report.errors)
    return body


def render_report(obj, fmt: str = "text", label: str | None = None) -> str:
    """Render a result or metric table as deterministic text or CSV."""
    if fmt not in ("text", "csv"):
        raise ValidationError(f"unknown report format {fmt!r}")
    if isinstance(obj, ResidualTable):
        return _render_residuals(obj, fmt)
    if isinstance(obj, DetectorReport):
        return _render_detector_report(obj, fmt)
    if isinstance(obj, TrainHistory):
        return _render_history(obj, fmt, label)
    if isinstance(obj, PipelineResult):
        return _render_pipeline_result(obj, fmt)
    if isinstance(obj, EvalReport):
        return _render_eval_report(obj, fmt)
    raise ValidationError(f"cannot render object of type {type(obj).__name__}")
