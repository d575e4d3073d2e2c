"""Input validation helpers shared across the package.

Follows the scikit-learn convention of small ``check_*`` functions that
either return the validated value or raise :class:`ValidationError`.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = [
    "ValidationError",
    "check_finite",
    "check_positive",
    "check_in_range",
    "check_image8",
]


class ValidationError(ValueError):
    """Raised when an input violates a documented precondition."""


def check_finite(value: float, name: str = "value") -> float:
    value = float(value)
    if not math.isfinite(value):
        raise ValidationError(f"{name} must be finite, got {value!r}")
    return value


def check_positive(value: float, name: str = "value") -> float:
    value = check_finite(value, name)
    if value <= 0:
        raise ValidationError(f"{name} must be > 0, got {value!r}")
    return value


def check_in_range(value, lo, hi, name: str = "value", *,
                   lo_open: bool = False, hi_open: bool = False):
    value = check_finite(value, name)
    if lo_open:
        ok_lo = value > lo
    else:
        ok_lo = value >= lo
    if hi_open:
        ok_hi = value < hi
    else:
        ok_hi = value <= hi
    if not (ok_lo and ok_hi):
        lo_b = "(" if lo_open else "["
        hi_b = ")" if hi_open else "]"
        raise ValidationError(
            f"{name} must lie in {lo_b}{lo}, {hi}{hi_b}, got {value!r}")
    return value


def check_image8(img, name: str = "image") -> np.ndarray:
    """Validate an 8-bit image: uint8 array, (H, W) or (H, W, 3), non-empty."""
    if not isinstance(img, np.ndarray):
        raise ValidationError(f"{name} must be a numpy array, got {type(img).__name__}")
    if img.dtype != np.uint8:
        raise ValidationError(f"{name} must have dtype uint8, got {img.dtype}")
    if img.ndim == 3:
        if img.shape[2] != 3:
            raise ValidationError(
                f"{name} must have 1 or 3 channels, got shape {img.shape}")
    elif img.ndim != 2:
        raise ValidationError(f"{name} must be 2-D or 3-D, got shape {img.shape}")
    if img.size == 0:
        raise ValidationError(f"{name} is empty")
    return img
