"""Nine-point hedonic scoring and acceptability-level mapping.

A consumer rates three sensory attributes of a fruit (color, shape,
texture) on a 1..9 liking scale, 9 being extreme like.  The attribute
scores are combined into a single *acceptability index* by a weighted
mean with a default weight ratio of 2:1:2 for color:shape:texture, and
the index is banded into one of eight verbal acceptability levels.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass

from .validation import ValidationError, check_finite

__all__ = [
    "SCALE_MIN",
    "SCALE_MAX",
    "LEVELS",
    "LEVEL_CUTS",
    "DEFAULT_WEIGHTS",
    "HedonicScore",
    "AttributeWeights",
    "AcceptabilityResult",
    "ScoreValidationError",
    "validate_score",
    "weighted_acceptability",
    "level_for",
]

SCALE_MIN = 1
SCALE_MAX = 9

#: Acceptability levels, ordered from least to most liked.
LEVELS = (
    "Dislike extremely",
    "Dislike very much",
    "Dislike moderately",
    "Dislike slightly",
    "Neither like nor dislike",
    "Like slightly",
    "Like moderately",
    "Like extremely",
)

#: Lower bound of each level band above the bottom one.  Below 3.5 is
#: "Dislike extremely"; each cut starts the next band, so 6.5 and above
#: is "Like extremely" (the 6.5 boundary is assigned upward, which
#: closes the gap the band table leaves at exactly 6.5).
LEVEL_CUTS = (3.5, 4.0, 4.5, 5.0, 5.5, 6.0, 6.5)


class ScoreValidationError(ValidationError):
    """Raised for out-of-range hedonic scores; carries all violations.

    Attributes
    ----------
    errors : list of str
        One message per offending field, so a caller can report every
        problem in a submitted score at once.
    """

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


def _score_field_errors(color, shape, texture) -> list[str]:
    errors = []
    for name, value in (("color", color), ("shape", shape), ("texture", texture)):
        if isinstance(value, bool) or not isinstance(value, int):
            errors.append(f"{name} must be an integer, got {value!r}")
        elif not SCALE_MIN <= value <= SCALE_MAX:
            errors.append(
                f"{name} must be in [{SCALE_MIN}, {SCALE_MAX}], got {value}")
    return errors


@dataclass(frozen=True)
class HedonicScore:
    """Per-attribute hedonic points, each an integer in [1, 9]."""

    color: int
    shape: int
    texture: int

    def __post_init__(self):
        errors = _score_field_errors(self.color, self.shape, self.texture)
        if errors:
            raise ScoreValidationError(errors)

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.color, self.shape, self.texture)


@dataclass(frozen=True)
class AttributeWeights:
    """Non-negative attribute weights; at least one must be positive."""

    w_color: float = 2.0
    w_shape: float = 1.0
    w_texture: float = 2.0

    def __post_init__(self):
        for name, value in (("w_color", self.w_color),
                            ("w_shape", self.w_shape),
                            ("w_texture", self.w_texture)):
            v = check_finite(value, name)
            if v < 0:
                raise ValidationError(f"{name} must be >= 0, got {value!r}")
            object.__setattr__(self, name, v)
        if self.w_color + self.w_shape + self.w_texture == 0:
            raise ValidationError("degenerate weights: all weights are zero")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.w_color, self.w_shape, self.w_texture)


#: Default weights, ratio 2:1:2 for color:shape:texture.
DEFAULT_WEIGHTS = AttributeWeights()


@dataclass(frozen=True)
class AcceptabilityResult:
    """An acceptability index together with its verbal level."""

    index: float
    level: str

    @classmethod
    def from_index(cls, index: float) -> "AcceptabilityResult":
        index = check_finite(index, "index")
        return cls(index=index, level=level_for(index))


def validate_score(color, shape, texture) -> HedonicScore:
    """Build a :class:`HedonicScore`, reporting *all* range violations.

    Raises
    ------
    ScoreValidationError
        With one message per out-of-range or non-integer field.
    """
    errors = _score_field_errors(color, shape, texture)
    if errors:
        raise ScoreValidationError(errors)
    return HedonicScore(color, shape, texture)


def weighted_acceptability(score: HedonicScore,
                           weights: AttributeWeights = DEFAULT_WEIGHTS) -> float:
    """Weighted mean of the attribute scores.

    Returns sum(w_i * x_i) / sum(w_i), which always lies between the
    smallest and largest attribute score, hence within [1, 9].
    """
    if not isinstance(score, HedonicScore):
        score = HedonicScore(*score)
    if not isinstance(weights, AttributeWeights):
        weights = AttributeWeights(*weights)
    w = weights.as_tuple()
    x = score.as_tuple()
    value = sum(wi * xi for wi, xi in zip(w, x)) / sum(w)
    # The exact mean lies within [min(x), max(x)]; clamp away the
    # one-ULP overshoot float division can introduce.
    return min(max(value, float(min(x))), float(max(x)))


def level_for(index: float) -> str:
    """Map a finite acceptability index to its level label.

    Total over all finite reals: values below 3.5 fall in "Dislike
    extremely" and values of 6.5 or more in "Like extremely", so
    out-of-scale regression outputs still get a label.
    """
    index = check_finite(index, "index")
    return LEVELS[bisect.bisect_right(LEVEL_CUTS, index)]
