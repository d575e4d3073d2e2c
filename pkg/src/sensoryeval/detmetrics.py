"""Detection-set evaluation: matching, precision/recall/F1, AP/mAP, NMS.

All matching follows the one-true-positive-per-ground-truth rule:
detections are visited in descending confidence and may claim at most
one still-unmatched ground truth of the same category.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

from .boxes import BoundingBox, Detection, ciou_terms, iou
from .validation import ValidationError, check_in_range

__all__ = [
    "MatchReport",
    "PrfScores",
    "NoGroundTruthWarning",
    "match_detections",
    "precision_recall_f1",
    "average_precision",
    "map_at",
    "mean_average_precision",
    "nms",
]

GroundTruth = tuple[BoundingBox, str]


class NoGroundTruthWarning(UserWarning):
    """A category had detections but no ground truths and was skipped."""


@dataclass(frozen=True)
class MatchReport:
    """Outcome of matching one detection set against one ground-truth set.

    tp + fn equals the number of ground truths and tp + fp the number of
    detections above the confidence threshold; matched_ious holds one
    IoU per true positive.
    """

    tp: int
    fp: int
    fn: int
    matched_ious: tuple[float, ...]
    per_detection_flags: tuple[str, ...]  # "TP" / "FP", descending confidence

    def __add__(self, other: "MatchReport") -> "MatchReport":
        return MatchReport(
            tp=self.tp + other.tp,
            fp=self.fp + other.fp,
            fn=self.fn + other.fn,
            matched_ious=self.matched_ious + other.matched_ious,
            per_detection_flags=self.per_detection_flags + other.per_detection_flags,
        )

    def average_iou(self) -> float:
        """Mean IoU over true positives; 0.0 when there are none."""
        if not self.matched_ious:
            return 0.0
        return sum(self.matched_ious) / len(self.matched_ious)


def _sorted_by_confidence(dets: list[Detection]) -> list[Detection]:
    # Stable sort: ties keep input order, so results are deterministic.
    return sorted(dets, key=lambda d: -d.confidence)


def _greedy_match(dets: list[Detection], gts: list[GroundTruth],
                  iou_thresh: float) -> tuple[list[str], list[float]]:
    """Flags ("TP"/"FP") per detection in descending-confidence order."""
    matched = [False] * len(gts)
    flags: list[str] = []
    ious: list[float] = []
    for det in _sorted_by_confidence(dets):
        best_iou = 0.0
        best_idx = -1
        for idx, (gt_box, gt_cat) in enumerate(gts):
            if matched[idx] or gt_cat != det.category:
                continue
            overlap = iou(det.box, gt_box)
            # Ties broken by lower ground-truth index (strict > keeps
            # the first maximum).
            if overlap > best_iou:
                best_iou = overlap
                best_idx = idx
        if best_idx >= 0 and best_iou >= iou_thresh:
            matched[best_idx] = True
            flags.append("TP")
            ious.append(best_iou)
        else:
            flags.append("FP")
    return flags, ious


def match_detections(dets: list[Detection], gts: list[GroundTruth],
                     iou_thresh: float, conf_thresh: float = 0.0) -> MatchReport:
    """Greedily match detections to ground truths of the same category.

    Detections below ``conf_thresh`` are dropped before matching.  A
    detection is a true positive iff its category matches and its IoU
    with a still-unmatched ground truth reaches ``iou_thresh``; every
    ground truth can be claimed once, all surplus detections are false
    positives, all unclaimed ground truths false negatives.
    """
    check_in_range(iou_thresh, 0.0, 1.0, "iou_thresh", lo_open=True)
    check_in_range(conf_thresh, 0.0, 1.0, "conf_thresh")
    kept = [d for d in dets if d.confidence >= conf_thresh]
    flags, ious = _greedy_match(kept, list(gts), iou_thresh)
    tp = flags.count("TP")
    return MatchReport(
        tp=tp,
        fp=len(kept) - tp,
        fn=len(gts) - tp,
        matched_ious=tuple(ious),
        per_detection_flags=tuple(flags),
    )


@dataclass(frozen=True)
class PrfScores:
    """Precision/recall/F1 with a flag for empty denominators.

    ``degenerate`` is set when tp+fp or tp+fn was zero; the affected
    ratios are reported as 0 by convention so that batch evaluation
    never aborts.
    """

    precision: float
    recall: float
    f1: float
    degenerate: bool = False


def precision_recall_f1(report: MatchReport) -> PrfScores:
    degenerate = False
    if report.tp + report.fp > 0:
        precision = report.tp / (report.tp + report.fp)
    else:
        precision, degenerate = 0.0, True
    if report.tp + report.fn > 0:
        recall = report.tp / (report.tp + report.fn)
    else:
        recall, degenerate = 0.0, True
    if precision + recall > 0:
        f1 = 2.0 * precision * recall / (precision + recall)
    else:
        f1 = 0.0
    return PrfScores(precision=precision, recall=recall, f1=f1,
                     degenerate=degenerate)


def average_precision(dets: list[Detection], gts: list[GroundTruth],
                      iou_thresh: float) -> float:
    """Area under the monotone-interpolated precision-recall curve.

    Detections are swept in descending confidence; at each prefix the
    running precision and recall form one PR point, the precision
    envelope is made monotone non-increasing from the right, and the
    area is accumulated over recall increments (all-points
    interpolation).
    """
    check_in_range(iou_thresh, 0.0, 1.0, "iou_thresh", lo_open=True)
    n_gt = len(gts)
    if n_gt == 0:
        raise ValidationError("average_precision needs at least one ground truth")
    flags, _ = _greedy_match(list(dets), list(gts), iou_thresh)
    precisions = []
    recalls = []
    tp = 0
    for rank, flag in enumerate(flags, start=1):
        if flag == "TP":
            tp += 1
        precisions.append(tp / rank)
        recalls.append(tp / n_gt)
    # Monotone envelope from the right.
    for i in range(len(precisions) - 2, -1, -1):
        precisions[i] = max(precisions[i], precisions[i + 1])
    ap = 0.0
    prev_recall = 0.0
    for p, r in zip(precisions, recalls):
        if r > prev_recall:
            ap += (r - prev_recall) * p
            prev_recall = r
    return ap


def map_at(per_category: dict[str, float | None]) -> float:
    """Unweighted mean of per-category APs, skipping ``None`` entries."""
    values = [v for v in per_category.values() if v is not None]
    skipped = sorted(k for k, v in per_category.items() if v is None)
    if skipped:
        warnings.warn(
            f"categories without ground truths excluded from mAP: {skipped}",
            NoGroundTruthWarning, stacklevel=2)
    if not values:
        raise ValidationError("no category had ground truths")
    return sum(values) / len(values)


def mean_average_precision(dets: list[Detection], gts: list[GroundTruth],
                           iou_thresh: float) -> tuple[float, dict[str, float | None]]:
    """mAP over the categories present in ``gts`` plus the per-category table.

    Categories that occur only among detections have no ground truths;
    they appear in the table as ``None`` and are excluded from the mean
    (a :class:`NoGroundTruthWarning` is emitted).
    """
    categories = sorted({c for _, c in gts} | {d.category for d in dets})
    per_category: dict[str, float | None] = {}
    for cat in categories:
        cat_gts = [g for g in gts if g[1] == cat]
        if not cat_gts:
            per_category[cat] = None
            continue
        cat_dets = [d for d in dets if d.category == cat]
        per_category[cat] = average_precision(cat_dets, cat_gts, iou_thresh)
    return map_at(per_category), per_category


def nms(dets: list[Detection], iou_thresh: float,
        variant: str = "standard") -> list[Detection]:
    """Greedy per-category non-maximum suppression.

    Repeatedly keeps the most confident remaining detection and discards
    same-category detections whose overlap metric with it reaches
    ``iou_thresh``.  The metric is IoU for the standard variant and DIoU
    (IoU minus the normalized center-distance penalty) for ``"diou"``.
    Output is sorted by descending confidence.
    """
    check_in_range(iou_thresh, 0.0, 1.0, "iou_thresh", lo_open=True, hi_open=True)
    if variant not in ("standard", "diou"):
        raise ValidationError(f"unknown NMS variant {variant!r}")

    def overlap(a: Detection, b: Detection) -> float:
        if variant == "diou":
            return ciou_terms(a.box, b.box).diou
        return iou(a.box, b.box)

    remaining = _sorted_by_confidence(dets)
    kept: list[Detection] = []
    while remaining:
        best = remaining.pop(0)
        kept.append(best)
        remaining = [d for d in remaining
                     if d.category != best.category or overlap(best, d) < iou_thresh]
    return kept
