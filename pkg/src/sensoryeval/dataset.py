"""Annotation ingestion, train/validation splitting, synthetic data.

The annotations file is UTF-8 CSV with the exact header
``image_path,color,shape,texture,annotator,timestamp,index,level``.
The stored index (3 decimals) and level are a cache: they are
recomputed on load and any mismatch is rejected as a stale label.

The synthetic generator substitutes for an unavailable photo corpus.
It renders an elliptical fruit over a textured gray background and
derives ground-truth hedonic scores from its own rendering parameters
(hue degradation g, blemish density d, eccentricity e), so training
runs have a known, invertible signal to learn.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from . import hedonic
from .boxes import BoundingBox
from .hedonic import DEFAULT_WEIGHTS, AttributeWeights, HedonicScore
from .validation import ValidationError

__all__ = [
    "ANNOTATION_HEADER",
    "AnnotationRecord",
    "AnnotationFormatError",
    "MissingImageWarning",
    "DatasetSplit",
    "SynthSpec",
    "SynthSample",
    "load_image",
    "save_image",
    "load_annotations",
    "save_annotations",
    "split",
    "synth_generate",
    "write_synth_dataset",
]

ANNOTATION_HEADER = ("image_path", "color", "shape", "texture",
                     "annotator", "timestamp", "index", "level")


class AnnotationFormatError(ValidationError):
    """A malformed or stale annotations row; message names the row."""


class MissingImageWarning(UserWarning):
    """A referenced image file does not exist (non-fatal)."""


def load_image(path: str | Path) -> np.ndarray:
    """Read an image file into a uint8 RGB (or grayscale) array."""
    with Image.open(path) as im:
        if im.mode not in ("L", "RGB"):
            im = im.convert("RGB")
        return np.asarray(im)


def save_image(img: np.ndarray, path: str | Path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(img).save(path)


@dataclass(frozen=True)
class AnnotationRecord:
    """One dataset row: image reference, score, provenance, derived label."""

    image_path: str
    score: HedonicScore
    annotator: str
    timestamp: str
    index: float
    level: str

    @classmethod
    def create(cls, image_path: str, score: HedonicScore, annotator: str,
               timestamp: str,
               weights: AttributeWeights = DEFAULT_WEIGHTS) -> "AnnotationRecord":
        index = hedonic.weighted_acceptability(score, weights)
        return cls(image_path=image_path, score=score, annotator=annotator,
                   timestamp=timestamp, index=index,
                   level=hedonic.level_for(index))


def save_annotations(records: list[AnnotationRecord], path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(ANNOTATION_HEADER)
        for rec in records:
            writer.writerow([rec.image_path, rec.score.color, rec.score.shape,
                             rec.score.texture, rec.annotator, rec.timestamp,
                             f"{rec.index:.3f}", rec.level])


def _parse_row(row: dict, row_num: int,
               weights: AttributeWeights) -> AnnotationRecord:
    try:
        score = hedonic.validate_score(int(row["color"]), int(row["shape"]),
                                       int(row["texture"]))
    except (ValueError, KeyError) as exc:
        raise AnnotationFormatError(f"row {row_num}: {exc}") from exc
    index = hedonic.weighted_acceptability(score, weights)
    level = hedonic.level_for(index)
    stored_index = row["index"].strip()
    # Stored values are a cache, never a source of truth: compare at the
    # serialized 3-decimal precision and reject anything stale.
    try:
        stored_fmt = f"{float(stored_index):.3f}"
    except ValueError as exc:
        raise AnnotationFormatError(
            f"row {row_num}: index {stored_index!r} is not a number") from exc
    if stored_fmt != f"{index:.3f}":
        raise AnnotationFormatError(
            f"row {row_num}: stale label: stored index {stored_index} != "
            f"recomputed {index:.3f}")
    if row["level"].strip() != level:
        raise AnnotationFormatError(
            f"row {row_num}: stale label: stored level {row['level']!r} != "
            f"recomputed {level!r}")
    return AnnotationRecord(image_path=row["image_path"], score=score,
                            annotator=row["annotator"],
                            timestamp=row["timestamp"], index=index, level=level)


def load_annotations(path: str | Path,
                     weights: AttributeWeights = DEFAULT_WEIGHTS,
                     check_images: bool = True) -> list[AnnotationRecord]:
    """Load and re-validate an annotations CSV.

    Every row's score is range-checked and its stored index/level are
    recomputed; mismatches raise :class:`AnnotationFormatError` naming
    the row.  Missing image files produce a :class:`MissingImageWarning`
    per file rather than failing the load.
    """
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or tuple(reader.fieldnames) != ANNOTATION_HEADER:
            raise AnnotationFormatError(
                f"bad header {reader.fieldnames!r}; expected "
                f"{','.join(ANNOTATION_HEADER)}")
        records = []
        for row_num, row in enumerate(reader, start=2):
            if any(v is None for v in row.values()):
                raise AnnotationFormatError(f"row {row_num}: wrong column count")
            records.append(_parse_row(row, row_num, weights))
    if check_images:
        root = path.parent
        for rec in records:
            if not (root / rec.image_path).exists():
                warnings.warn(f"image file not found: {rec.image_path}",
                              MissingImageWarning, stacklevel=2)
    return records


@dataclass(frozen=True)
class DatasetSplit:
    """Disjoint train/validation partition of a record list."""

    train: tuple[AnnotationRecord, ...]
    val: tuple[AnnotationRecord, ...]
    seed: int
    ratio: float


def split(records: list[AnnotationRecord], ratio: float, seed: int) -> DatasetSplit:
    """Deterministic shuffle-then-cut split.

    The train size is ratio * N rounded to the nearest record and
    clamped so both sides stay non-empty (299 records at 0.8 give the
    conventional 239/60).
    """
    if not 0.0 < ratio < 1.0:
        raise ValidationError(f"ratio must lie in (0, 1), got {ratio}")
    n = len(records)
    if n < 2:
        raise ValidationError(f"need at least 2 records to split, got {n}")
    order = np.random.default_rng(seed).permutation(n)
    n_train = int(math.floor(ratio * n + 0.5))
    n_train = min(max(n_train, 1), n - 1)
    train = tuple(records[i] for i in order[:n_train])
    val = tuple(records[i] for i in order[n_train:])
    return DatasetSplit(train=train, val=val, seed=seed, ratio=ratio)


# ---------------------------------------------------------------------------
# Synthetic fruit generator

#: Fixed provenance stamp so generated datasets are byte-reproducible.
SYNTH_TIMESTAMP = "2021-03-01T00:00:00+00:00"
SYNTH_ANNOTATOR = "synthetic"

_FRESH_RGB = np.array([72.0, 186.0, 64.0])
_DEGRADED_RGB = np.array([118.0, 76.0, 34.0])
_BLEMISH_RGB = np.array([25.0, 18.0, 12.0])


@dataclass(frozen=True)
class SynthSpec:
    """Synthetic dataset parameters; fully determined by ``seed``."""

    count: int
    seed: int
    image_size: int = 96
    g_range: tuple[float, float] = (0.0, 1.0)  # hue degradation
    d_range: tuple[float, float] = (0.0, 1.0)  # blemish density
    e_range: tuple[float, float] = (0.0, 1.0)  # eccentricity

    def __post_init__(self):
        if self.count <= 0:
            raise ValidationError(f"count must be positive, got {self.count}")
        if self.image_size < 16:
            raise ValidationError("image_size must be at least 16 pixels")
        for name in ("g_range", "d_range", "e_range"):
            lo, hi = getattr(self, name)
            if not (0.0 <= lo <= hi <= 1.0):
                raise ValidationError(f"{name} must satisfy 0 <= lo <= hi <= 1")


@dataclass(frozen=True)
class SynthSample:
    """One generated image with its oracle annotation and fruit box."""

    image: np.ndarray
    record: AnnotationRecord
    box: BoundingBox  # pixel-space, center format
    g: float
    d: float
    e: float


def _oracle_score(g: float, d: float, e: float) -> HedonicScore:
    # The generator's own ground truth: pristine parameters score 9,
    # fully degraded ones score 1, linearly in between.
    def pts(x: float) -> int:
        return int(round(1.0 + 8.0 * (1.0 - x)))

    return HedonicScore(color=pts(g), shape=pts(e), texture=pts(d))


def _render_fruit(rng: np.random.Generator, size: int,
                  g: float, d: float, e: float) -> tuple[np.ndarray, BoundingBox]:
    # Textured gray background: equal channels, so the colored fruit is
    # separable by channel spread.
    base = rng.uniform(50.0, 70.0)
    gray = base + rng.normal(0.0, 6.0, size=(size, size))
    img = np.repeat(gray[:, :, None], 3, axis=2)

    cx = size / 2.0 + rng.uniform(-size / 16.0, size / 16.0)
    cy = size / 2.0 + rng.uniform(-size / 16.0, size / 16.0)
    a = rng.uniform(0.32, 0.40) * size          # semi-axis along x
    b = a * (1.0 - 0.55 * e)                    # eccentricity squeezes y

    ys, xs = np.mgrid[0:size, 0:size]
    inside = ((xs - cx) / a) ** 2 + ((ys - cy) / b) ** 2 <= 1.0

    color = (1.0 - g) * _FRESH_RGB + g * _DEGRADED_RGB
    shading = rng.normal(0.0, 4.0, size=(size, size))
    for c in range(3):
        img[:, :, c][inside] = color[c] + shading[inside]

    # Blemish spots: dark disks whose count tracks d.
    n_spots = int(round(d * 18.0))
    r_spot = max(size / 18.0, 2.0)
    for _ in range(n_spots):
        theta = rng.uniform(0.0, 2.0 * np.pi)
        radius = math.sqrt(rng.uniform(0.0, 1.0))
        sx = cx + 0.8 * a * radius * math.cos(theta)
        sy = cy + 0.8 * b * radius * math.sin(theta)
        spot = ((xs - sx) ** 2 + (ys - sy) ** 2) <= r_spot ** 2
        spot &= inside
        for c in range(3):
            img[:, :, c][spot] = _BLEMISH_RGB[c]

    # Ground-truth box tight around the rendered pixels.
    rows = np.nonzero(inside.any(axis=1))[0]
    cols = np.nonzero(inside.any(axis=0))[0]
    box = BoundingBox.from_corners(float(cols[0]), float(rows[0]),
                                   float(cols[-1] + 1), float(rows[-1] + 1))
    return np.clip(img, 0, 255).astype(np.uint8), box


def synth_generate(spec: SynthSpec,
                   weights: AttributeWeights = DEFAULT_WEIGHTS) -> list[SynthSample]:
    """Generate ``spec.count`` oracle-labeled fruit images.

    Image paths follow ``images/synth_NNNN.png`` so a later
    :func:`write_synth_dataset` call and the annotations CSV agree.
    """
    rng = np.random.default_rng(spec.seed)
    samples = []
    for i in range(spec.count):
        g = float(rng.uniform(*spec.g_range))
        d = float(rng.uniform(*spec.d_range))
        e = float(rng.uniform(*spec.e_range))
        img, box = _render_fruit(rng, spec.image_size, g, d, e)
        record = AnnotationRecord.create(
            image_path=f"images/synth_{i:04d}.png",
            score=_oracle_score(g, d, e),
            annotator=SYNTH_ANNOTATOR,
            timestamp=SYNTH_TIMESTAMP,
            weights=weights)
        samples.append(SynthSample(image=img, record=record, box=box,
                                   g=g, d=d, e=e))
    return samples


def write_synth_dataset(spec: SynthSpec, out_dir: str | Path,
                        category: str = "guava") -> list[SynthSample]:
    """Materialize a synthetic dataset on disk.

    Writes ``images/``, ``annotations.csv`` and a ground-truth
    detections file ``detections.jsonl`` in the interchange format
    (one JSON object per line, bbox normalized center-format), which
    doubles as a stub-detector sidecar.
    """
    out_dir = Path(out_dir)
    samples = synth_generate(spec)
    for sample in samples:
        save_image(sample.image, out_dir / sample.record.image_path)
    save_annotations([s.record for s in samples], out_dir / "annotations.csv")
    with open(out_dir / "detections.jsonl", "w", encoding="utf-8") as fh:
        for sample in samples:
            norm = sample.box.to_normalized(spec.image_size, spec.image_size)
            fh.write(json.dumps({
                "image": sample.record.image_path,
                "category": category,
                "confidence": 1.0,
                "bbox": [norm.bx, norm.by, norm.bw, norm.bh],
            }) + "\n")
    return samples
