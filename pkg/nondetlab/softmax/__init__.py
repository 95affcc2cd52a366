"""Temperature softmax and its sensitivity structure."""

from nondetlab.softmax.sensitivity import (
    DEFAULT_THRESHOLDS,
    NARROW_MID_THRESHOLDS,
    SensitivityRegime,
    classify_regimes,
    sensitivity_regime,
    softmax_jacobian,
)
from nondetlab.softmax.softmax import LogitVector, ProbabilityVector, softmax_rows, softmax_t, two_token_prob

__all__ = [
    "DEFAULT_THRESHOLDS",
    "NARROW_MID_THRESHOLDS",
    "LogitVector",
    "ProbabilityVector",
    "SensitivityRegime",
    "classify_regimes",
    "sensitivity_regime",
    "softmax_jacobian",
    "softmax_rows",
    "softmax_t",
    "two_token_prob",
]
