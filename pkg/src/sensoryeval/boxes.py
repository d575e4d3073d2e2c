"""Bounding-box algebra: IoU/DIoU/CIoU, cropping, anchors.

Boxes are carried in center format (bx, by, bw, bh) throughout the
package; x grows rightward (columns), y grows downward (rows).  Corner
format conversion helpers are provided for geometry code that wants
(x1, y1, x2, y2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .validation import ValidationError, check_image8, check_in_range, check_positive

__all__ = [
    "BoundingBox",
    "Detection",
    "AnchorSpec",
    "CiouTerms",
    "EmptyCropError",
    "iou",
    "ciou_terms",
    "crop",
    "generate_anchors",
    "label_anchors",
    "POSITIVE",
    "NEGATIVE",
    "IGNORE",
]

POSITIVE = "positive"
NEGATIVE = "negative"
IGNORE = "ignore"


class EmptyCropError(ValidationError):
    """The crop box does not intersect the image at all."""


@dataclass(frozen=True)
class BoundingBox:
    """Center-format box: center (bx, by), width bw > 0, height bh > 0.

    Coordinates may be in pixels or normalized to [0, 1]; the two
    conventions must not be mixed within one computation.
    """

    bx: float
    by: float
    bw: float
    bh: float

    def __post_init__(self):
        for name in ("bx", "by", "bw", "bh"):
            v = getattr(self, name)
            if not math.isfinite(float(v)):
                raise ValidationError(f"{name} must be finite, got {v!r}")
            object.__setattr__(self, name, float(v))
        if self.bw <= 0 or self.bh <= 0:
            raise ValidationError(
                f"box width/height must be > 0, got bw={self.bw}, bh={self.bh}")

    @classmethod
    def from_corners(cls, x1: float, y1: float, x2: float, y2: float) -> "BoundingBox":
        return cls(bx=(x1 + x2) / 2.0, by=(y1 + y2) / 2.0, bw=x2 - x1, bh=y2 - y1)

    def corners(self) -> tuple[float, float, float, float]:
        """(x1, y1, x2, y2) with x1 < x2 and y1 < y2."""
        hw = self.bw / 2.0
        hh = self.bh / 2.0
        return (self.bx - hw, self.by - hh, self.bx + hw, self.by + hh)

    def area(self) -> float:
        return self.bw * self.bh

    def scaled(self, sx: float, sy: float) -> "BoundingBox":
        """Scale all coordinates, e.g. normalized -> pixel space."""
        return BoundingBox(self.bx * sx, self.by * sy, self.bw * sx, self.bh * sy)

    def to_pixels(self, width: int, height: int) -> "BoundingBox":
        """Interpret this box as normalized and map it to pixel space."""
        return self.scaled(float(width), float(height))

    def to_normalized(self, width: int, height: int) -> "BoundingBox":
        """Interpret this box as pixel-space and normalize by image size."""
        return self.scaled(1.0 / float(width), 1.0 / float(height))


@dataclass(frozen=True)
class Detection:
    """A detector output: box, category label, confidence in [0, 1]."""

    box: BoundingBox
    category: str
    confidence: float

    def __post_init__(self):
        if not self.category:
            raise ValidationError("category must be non-empty")
        check_in_range(self.confidence, 0.0, 1.0, "confidence")
        object.__setattr__(self, "confidence", float(self.confidence))


@dataclass(frozen=True)
class AnchorSpec:
    """Anchor layout: pixel scales, w/h aspect ratios, grid stride."""

    scales: tuple[float, ...]
    aspect_ratios: tuple[float, ...]
    stride: int

    def __post_init__(self):
        object.__setattr__(self, "scales", tuple(float(s) for s in self.scales))
        object.__setattr__(self, "aspect_ratios",
                           tuple(float(r) for r in self.aspect_ratios))
        if not self.scales or not self.aspect_ratios:
            raise ValidationError("scales and aspect_ratios must be non-empty")
        for s in self.scales:
            check_positive(s, "scale")
        for r in self.aspect_ratios:
            check_positive(r, "aspect_ratio")
        if int(self.stride) <= 0:
            raise ValidationError(f"stride must be a positive integer, got {self.stride!r}")
        object.__setattr__(self, "stride", int(self.stride))


def _intersection_area(a: BoundingBox, b: BoundingBox) -> float:
    ax1, ay1, ax2, ay2 = a.corners()
    bx1, by1, bx2, by2 = b.corners()
    iw = min(ax2, bx2) - max(ax1, bx1)
    ih = min(ay2, by2) - max(ay1, by1)
    if iw <= 0 or ih <= 0:
        return 0.0
    return iw * ih


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection over union; symmetric, in [0, 1]."""
    inter = _intersection_area(a, b)
    union = a.area() + b.area() - inter
    return inter / union


@dataclass(frozen=True)
class CiouTerms:
    """IoU with distance and aspect-ratio penalty terms.

    diou = iou - rho2/c2 and ciou = diou - alpha*v, where rho2 is the
    squared center distance, c2 the squared diagonal of the smallest
    enclosing box, v the aspect-ratio dissimilarity and alpha its
    trade-off coefficient.  Both penalties are non-negative, hence
    ciou <= diou <= iou.
    """

    iou: float
    diou: float
    ciou: float
    v: float
    alpha: float
    rho2: float
    c2: float


def ciou_terms(pred: BoundingBox, gt: BoundingBox) -> CiouTerms:
    """Evaluate the complete-IoU decomposition of a box pair."""
    i = iou(pred, gt)
    rho2 = (pred.bx - gt.bx) ** 2 + (pred.by - gt.by) ** 2
    px1, py1, px2, py2 = pred.corners()
    gx1, gy1, gx2, gy2 = gt.corners()
    cw = max(px2, gx2) - min(px1, gx1)
    ch = max(py2, gy2) - min(py1, gy1)
    c2 = cw * cw + ch * ch
    v = (4.0 / math.pi ** 2) * (
        math.atan(gt.bw / gt.bh) - math.atan(pred.bw / pred.bh)) ** 2
    denom = (1.0 - i) + v
    alpha = v / denom if denom > 0 else 0.0  # identical boxes: v=0, iou=1
    diou = i - rho2 / c2
    ciou = diou - alpha * v
    return CiouTerms(iou=i, diou=diou, ciou=ciou, v=v, alpha=alpha, rho2=rho2, c2=c2)


def _round_index(v: float) -> int:
    # Half rounds up; only used on coordinates that get clamped to the
    # image afterwards, where the tie direction is immaterial.
    return int(math.floor(v + 0.5))


def crop(image: np.ndarray, box: BoundingBox) -> np.ndarray:
    """Extract the pixel rectangle covered by ``box`` (pixel coordinates).

    The box is rounded to whole pixels and clamped to the image bounds;
    the result is a copy, never a view.

    Raises
    ------
    EmptyCropError
        If the box lies entirely outside the image.
    """
    check_image8(image, "image")
    h, w = image.shape[:2]
    x1, y1, x2, y2 = box.corners()
    x1, y1, x2, y2 = (_round_index(x1), _round_index(y1),
                      _round_index(x2), _round_index(y2))
    x1c, y1c = max(x1, 0), max(y1, 0)
    x2c, y2c = min(x2, w), min(y2, h)
    if x2c <= x1c or y2c <= y1c:
        raise EmptyCropError(
            f"box {box} does not intersect a {w}x{h} image")
    return image[y1c:y2c, x1c:x2c].copy()


def generate_anchors(spec: AnchorSpec, image_w: int, image_h: int) -> list[BoundingBox]:
    """Anchors for every (grid cell, scale, aspect ratio) combination.

    The grid has floor(W/stride) x floor(H/stride) cells with anchor
    centers at cell centers, i.e. ((i + 0.5) * stride, (j + 0.5) * stride).
    An anchor of scale s and ratio r has width s*sqrt(r) and height
    s/sqrt(r), preserving area across ratios.  Anchors are emitted in
    row-major cell order, then by scale, then by ratio.
    """
    if image_w <= 0 or image_h <= 0:
        raise ValidationError("image dimensions must be positive")
    if spec.stride > image_w or spec.stride > image_h:
        raise ValidationError(
            f"stride {spec.stride} exceeds image side ({image_w}x{image_h})")
    nx = image_w // spec.stride
    ny = image_h // spec.stride
    anchors = []
    for j in range(ny):
        cy = (j + 0.5) * spec.stride
        for i in range(nx):
            cx = (i + 0.5) * spec.stride
            for s in spec.scales:
                for r in spec.aspect_ratios:
                    sq = math.sqrt(r)
                    anchors.append(BoundingBox(cx, cy, s * sq, s / sq))
    return anchors


def label_anchors(anchors: list[BoundingBox], gts: list[BoundingBox],
                  pos_thresh: float, neg_thresh: float) -> list[str]:
    """Label each anchor positive/negative/ignore by max IoU over gts.

    Strictly above ``pos_thresh`` is positive, strictly below
    ``neg_thresh`` negative, anything else (including exact threshold
    hits) is ignore.  With no ground truths every anchor is negative.
    """
    check_in_range(pos_thresh, 0.0, 1.0, "pos_thresh")
    check_in_range(neg_thresh, 0.0, 1.0, "neg_thresh")
    if neg_thresh > pos_thresh:
        raise ValidationError(
            f"neg_thresh ({neg_thresh}) must not exceed pos_thresh ({pos_thresh})")
    labels = []
    for anchor in anchors:
        best = max((iou(anchor, gt) for gt in gts), default=0.0)
        if best > pos_thresh:
            labels.append(POSITIVE)
        elif best < neg_thresh:
            labels.append(NEGATIVE)
        else:
            labels.append(IGNORE)
    return labels
