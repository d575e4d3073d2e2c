"""sensoryeval: fruit acceptability scoring toolkit.

Detects fruit in images, crops each detection, predicts a 1-9 consumer
acceptability index with a transfer-learned regression CNN and maps it
to a verbal acceptability level; includes the annotation workflow,
detection/regression evaluation metrics and classical preprocessing
primitives.
"""

__version__ = "0.1.0"

from .boxes import AnchorSpec, BoundingBox, Detection
from .hedonic import (
    DEFAULT_WEIGHTS,
    AcceptabilityResult,
    AttributeWeights,
    HedonicScore,
    level_for,
    validate_score,
    weighted_acceptability,
)
from .validation import ValidationError

__all__ = [
    "__version__",
    "AnchorSpec",
    "BoundingBox",
    "Detection",
    "DEFAULT_WEIGHTS",
    "AcceptabilityResult",
    "AttributeWeights",
    "HedonicScore",
    "level_for",
    "validate_score",
    "weighted_acceptability",
    "ValidationError",
]
