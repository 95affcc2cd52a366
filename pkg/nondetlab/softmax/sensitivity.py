"""Softmax Jacobian and the three sensitivity regimes.

Near 0 and near 1 the softmax saturates and damps logit perturbations;
in between it amplifies them. The Jacobian ``J_ij = p_i (d_ij - p_j) / T``
quantifies this: its diagonal ``p_i (1 - p_i) / T`` peaks at 0.5.
"""

from enum import Enum

import numpy as np
from numpy.typing import ArrayLike

from nondetlab.errors import DataError, UsageError
from nondetlab.softmax.softmax import ProbabilityVector

DEFAULT_THRESHOLDS = (0.1, 0.9)
# Narrower mid band, for a stricter amplified regime.
NARROW_MID_THRESHOLDS = (0.2, 0.8)


class SensitivityRegime(str, Enum):
    SUPPRESSED_LOW = "suppressed_low"
    AMPLIFIED_MID = "amplified_mid"
    SUPPRESSED_HIGH = "suppressed_high"


def softmax_jacobian(p: ProbabilityVector) -> np.ndarray:
    """Jacobian of the temperature softmax with respect to the logits.

    Args:
        p: Softmax output (its temperature is used)

    Returns:
        (V, V) matrix ``J[i, j] = dp_i / dz_j``
    """
    v = p.p
    return (np.diag(v) - np.outer(v, v)) / p.temperature


def _check_thresholds(thresholds: tuple[float, float]) -> tuple[float, float]:
    low, high = thresholds
    if not 0 <= low <= high <= 1:
        raise UsageError(f"invalid regime thresholds {thresholds}")
    return float(low), float(high)


def sensitivity_regime(p_i: float, thresholds: tuple[float, float] = DEFAULT_THRESHOLDS) -> SensitivityRegime:
    """Classify a probability into its sensitivity regime.

    Args:
        p_i: Token probability in [0, 1]
        thresholds: (low, high); the mid regime includes both bounds

    Returns:
        The regime
    """
    low, high = _check_thresholds(thresholds)
    if not 0.0 <= p_i <= 1.0:
        raise DataError(f"probability out of range: {p_i}")
    if p_i < low:
        return SensitivityRegime.SUPPRESSED_LOW
    if p_i > high:
        return SensitivityRegime.SUPPRESSED_HIGH
    return SensitivityRegime.AMPLIFIED_MID


def classify_regimes(p: ArrayLike, thresholds: tuple[float, float] = DEFAULT_THRESHOLDS) -> np.ndarray:
    """Vectorized :func:`sensitivity_regime`; returns an array of regime values (strings)."""
    low, high = _check_thresholds(thresholds)
    p = np.asarray(p, dtype=np.float64)
    if np.any(~np.isfinite(p)) or np.any(p < 0) or np.any(p > 1):
        raise DataError("probability out of range")
    out = np.full(p.shape, SensitivityRegime.AMPLIFIED_MID.value, dtype=object)
    out[p < low] = SensitivityRegime.SUPPRESSED_LOW.value
    out[p > high] = SensitivityRegime.SUPPRESSED_HIGH.value
    return out
