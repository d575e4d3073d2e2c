"""Pluggable object-detector adapter.

Two backends produce :class:`~sensoryeval.boxes.Detection` lists from
images: ``pretrained`` wraps an externally produced Darknet-compatible
network via OpenCV's DNN module (this package never trains a detector),
and ``stub`` deterministically replays detections from a sidecar file
so pipelines can be exercised without model weights.

Both backends emit boxes in center format normalized to [0, 1], filter
by the configured confidence threshold and apply (DIoU-)NMS.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import detmetrics
from .boxes import BoundingBox, Detection
from .validation import ValidationError, check_image8, check_in_range

__all__ = [
    "DetectorConfig",
    "DetectorError",
    "Detector",
    "DetectorReport",
    "GroundTruthSample",
    "detect",
    "evaluate_detector",
    "load_interchange",
    "dump_interchange",
]


class DetectorError(RuntimeError):
    """Detector could not be constructed (missing/corrupt inputs)."""


@dataclass(frozen=True)
class DetectorConfig:
    """Backend selection and inference thresholds.

    ``weights_path`` (with a sibling ``.cfg`` file of the same stem)
    configures the pretrained backend; ``sidecar_path`` points the stub
    backend at its detections file.
    """

    backend: str = "stub"
    weights_path: str | None = None
    sidecar_path: str | None = None
    category_names: tuple[str, ...] = ("guava",)
    confidence_threshold: float = 0.25
    nms_iou_threshold: float = 0.45
    nms_variant: str = "standard"
    input_size: int = 416  # pretrained backend network input

    def __post_init__(self):
        if self.backend not in ("pretrained", "stub"):
            raise ValidationError(f"unknown detector backend {self.backend!r}")
        if not self.category_names:
            raise ValidationError("category_names must be non-empty")
        object.__setattr__(self, "category_names", tuple(self.category_names))
        check_in_range(self.confidence_threshold, 0.0, 1.0, "confidence_threshold")
        check_in_range(self.nms_iou_threshold, 0.0, 1.0, "nms_iou_threshold",
                       lo_open=True, hi_open=True)
        if self.nms_variant not in ("standard", "diou"):
            raise ValidationError(f"unknown nms_variant {self.nms_variant!r}")


def load_interchange(path: str | Path) -> list[dict]:
    """Read a detections-interchange file (one JSON object per line)."""
    entries = []
    with open(path, encoding="utf-8") as fh:
        for line_num, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                bbox = obj["bbox"]
                entry = {
                    "image": obj["image"],
                    "category": obj["category"],
                    "confidence": float(obj["confidence"]),
                    "bbox": [float(v) for v in bbox],
                }
                if len(entry["bbox"]) != 4:
                    raise ValueError("bbox must have 4 entries")
            except (KeyError, ValueError, TypeError) as exc:
                raise ValidationError(
                    f"{path}:{line_num}: bad interchange line: {exc}") from exc
            entries.append(entry)
    return entries


def dump_interchange(image: str, detections: list[Detection]) -> str:
    """Serialize detections for one image, one JSON object per line."""
    lines = []
    for det in detections:
        lines.append(json.dumps({
            "image": image,
            "category": det.category,
            "confidence": det.confidence,
            "bbox": [det.box.bx, det.box.by, det.box.bw, det.box.bh],
        }))
    return "\n".join(lines)


def _entry_to_detection(entry: dict) -> Detection:
    bx, by, bw, bh = entry["bbox"]
    # Interchange boxes are normalized center-format: centers in [0, 1]
    # (corners may poke outside; cropping clamps them later).
    if not (0.0 <= bx <= 1.0 and 0.0 <= by <= 1.0):
        raise ValidationError(
            f"bbox center ({bx}, {by}) is not normalized to [0, 1]")
    return Detection(box=BoundingBox(bx, by, bw, bh),
                     category=entry["category"],
                     confidence=entry["confidence"])


class Detector:
    """Immutable detector handle; ``detect`` may be called concurrently."""

    def __init__(self, cfg: DetectorConfig):
        self.cfg = cfg
        if cfg.backend == "stub":
            self._sidecar = self._load_sidecar(cfg)
        else:
            self._net, self._out_layers = self._load_pretrained(cfg)

    @staticmethod
    def _load_sidecar(cfg: DetectorConfig) -> dict[str, list[Detection]]:
        if not cfg.sidecar_path:
            raise DetectorError("stub backend requires sidecar_path")
        path = Path(cfg.sidecar_path)
        if not path.exists():
            raise DetectorError(f"stub sidecar not found: {path}")
        table: dict[str, list[Detection]] = {}
        for entry in load_interchange(path):
            table.setdefault(entry["image"], []).append(_entry_to_detection(entry))
        return table

    @staticmethod
    def _load_pretrained(cfg: DetectorConfig):
        import cv2

        if not cfg.weights_path:
            raise DetectorError("pretrained backend requires weights_path")
        weights = Path(cfg.weights_path)
        net_cfg = weights.with_suffix(".cfg")
        if not weights.exists():
            raise DetectorError(f"detector weights not found: {weights}")
        if not net_cfg.exists():
            raise DetectorError(f"detector network config not found: {net_cfg}")
        try:
            net = cv2.dnn.readNetFromDarknet(str(net_cfg), str(weights))
        except cv2.error as exc:
            raise DetectorError(f"cannot load detector weights: {exc}") from exc
        layer_names = net.getLayerNames()
        out_layers = [layer_names[i - 1] for i in net.getUnconnectedOutLayers().flatten()]
        return net, out_layers

    def detect(self, image: np.ndarray, key: str | None = None) -> list[Detection]:
        """Detections above the confidence threshold, after NMS.

        For the stub backend, ``key`` selects the sidecar entries for
        this image (its path); sidecar lines with image ``"*"`` apply to
        every image.  Boxes are normalized center-format.
        """
        check_image8(image, "image")
        if self.cfg.backend == "stub":
            candidates = list(self._sidecar.get(key, [])) if key else []
            candidates += self._sidecar.get("*", [])
        else:
            candidates = self._detect_pretrained(image)
        kept = [d for d in candidates
                if d.confidence >= self.cfg.confidence_threshold]
        return detmetrics.nms(kept, self.cfg.nms_iou_threshold,
                              variant=self.cfg.nms_variant)

    def _detect_pretrained(self, image: np.ndarray) -> list[Detection]:
        import cv2

        if image.ndim == 2:
            image = np.repeat(image[:, :, None], 3, axis=2)
        blob = cv2.dnn.blobFromImage(
            image[:, :, ::-1], 1.0 / 255.0,
            (self.cfg.input_size, self.cfg.input_size), swapRB=False, crop=False)
        self._net.setInput(blob)
        outputs = self._net.forward(self._out_layers)
        detections = []
        names = self.cfg.category_names
        for output in outputs:
            for row in output:
                scores = row[5:]
                class_id = int(np.argmax(scores))
                confidence = float(row[4] * scores[class_id])
                if confidence <= 0 or class_id >= len(names):
                    continue
                bx, by, bw, bh = (float(v) for v in row[:4])
                if bw <= 0 or bh <= 0:
                    continue
                detections.append(Detection(
                    box=BoundingBox(bx, by, bw, bh),
                    category=names[class_id],
                    confidence=min(confidence, 1.0)))
        return detections


def detect(cfg: DetectorConfig, image: np.ndarray,
           key: str | None = None) -> list[Detection]:
    """One-shot detection; build a :class:`Detector` for repeated use."""
    return Detector(cfg).detect(image, key=key)


@dataclass(frozen=True)
class GroundTruthSample:
    """One evaluation item: image (or its stub key) plus ground truths."""

    key: str
    ground_truths: tuple[tuple[BoundingBox, str], ...]
    image: np.ndarray | None = None


@dataclass(frozen=True)
class DetectorReport:
    """Detection-set evaluation in the standard report row layout."""

    tp: int
    fp: int
    fn: int
    average_iou: float
    map_score: float
    precision: float
    recall: float
    f1: float
    iou_thresh: float = 0.5
    per_category_ap: dict = field(default_factory=dict)

    @classmethod
    def from_counts(cls, tp: int, fp: int, fn: int, average_iou: float = 0.0,
                    map_score: float = 0.0, iou_thresh: float = 0.5) -> "DetectorReport":
        """Derive precision/recall/F1 from raw counts (report plumbing)."""
        prf = detmetrics.precision_recall_f1(
            detmetrics.MatchReport(tp=tp, fp=fp, fn=fn, matched_ious=(),
                                   per_detection_flags=()))
        return cls(tp=tp, fp=fp, fn=fn, average_iou=average_iou,
                   map_score=map_score, precision=prf.precision,
                   recall=prf.recall, f1=prf.f1, iou_thresh=iou_thresh)


def evaluate_detector(cfg: DetectorConfig | Detector,
                      samples: list[GroundTruthSample],
                      iou_thresh: float = 0.5) -> DetectorReport:
    """Aggregate detection metrics over a ground-truthed image set.

    Per-image match reports are summed (TP/FP/FN, matched IoUs);
    AP/mAP is computed over the pooled detection and ground-truth sets.
    """
    detector = cfg if isinstance(cfg, Detector) else Detector(cfg)
    if not samples:
        raise ValidationError("no evaluation samples given")
    total = detmetrics.MatchReport(tp=0, fp=0, fn=0, matched_ious=(),
                                   per_detection_flags=())
    pooled_dets: list[Detection] = []
    pooled_gts: list[tuple[BoundingBox, str]] = []
    for sample in samples:
        image = sample.image
        if image is None:
            # Stub replay needs no pixels; use a minimal placeholder.
            image = np.zeros((1, 1), dtype=np.uint8)
        dets = detector.detect(image, key=sample.key)
        gts = list(sample.ground_truths)
        total = total + detmetrics.match_detections(dets, gts, iou_thresh)
        pooled_dets.extend(dets)
        pooled_gts.extend(gts)
    map_score, per_cat = detmetrics.mean_average_precision(
        pooled_dets, pooled_gts, iou_thresh)
    prf = detmetrics.precision_recall_f1(total)
    return DetectorReport(tp=total.tp, fp=total.fp, fn=total.fn,
                          average_iou=total.average_iou(), map_score=map_score,
                          precision=prf.precision, recall=prf.recall,
                          f1=prf.f1, iou_thresh=iou_thresh,
                          per_category_ap=per_cat)
