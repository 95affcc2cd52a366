"""Logit and probability vectors, temperature softmax."""

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike

from nondetlab.errors import DataError, UsageError


@dataclass(frozen=True, eq=False)
class LogitVector:
    """One run's pre-softmax scores at one generation step."""

    z: np.ndarray
    step_index: int = 0
    run_id: str | int = 0
    overflow: bool = False

    def __post_init__(self):
        z = np.array(self.z, dtype=np.float64)
        if z.ndim != 1 or z.size < 2:
            raise DataError("logits need a vector of at least 2 entries")
        z.setflags(write=False)
        object.__setattr__(self, "z", z)

    def __len__(self) -> int:
        return self.z.size


@dataclass(frozen=True, eq=False)
class ProbabilityVector:
    """Softmax output over the vocabulary, with the temperature that produced it."""

    p: np.ndarray
    temperature: float = 1.0
    token_ids: np.ndarray | None = field(default=None)

    def __post_init__(self):
        p = np.array(self.p, dtype=np.float64)
        if p.ndim != 1 or p.size < 1:
            raise DataError("probabilities need a non-empty vector")
        if np.any(~np.isfinite(p)) or np.any(p < 0) or np.any(p > 1):
            raise DataError("probabilities must lie in [0, 1]")
        if self.temperature <= 0:
            raise UsageError("temperature must be positive")
        p.setflags(write=False)
        object.__setattr__(self, "p", p)
        if self.token_ids is not None:
            ids = np.asarray(self.token_ids, dtype=np.int64)
            if ids.shape != p.shape:
                raise DataError("token_ids must match the probability vector")
            object.__setattr__(self, "token_ids", ids)

    def __len__(self) -> int:
        return self.p.size


def softmax_t(logits: LogitVector | ArrayLike, T: float = 1.0) -> ProbabilityVector:
    """Temperature softmax ``p_i = exp(z_i/T) / sum_j exp(z_j/T)``.

    The maximum logit is subtracted before exponentiating.

    Args:
        logits: LogitVector or raw scores
        T: Temperature (> 0)

    Returns:
        ProbabilityVector summing to 1 within 1e-12
    """
    if not T > 0:
        raise UsageError(f"temperature must be positive, got {T}")
    z = logits.z if isinstance(logits, LogitVector) else np.asarray(logits, dtype=np.float64)
    if np.isnan(z).any():
        raise DataError("logits contain NaN")
    if not np.isfinite(z).all():
        raise DataError("logits must be finite")
    scaled = (z - z.max()) / T
    e = np.exp(scaled)
    return ProbabilityVector(e / math.fsum(e), temperature=T)


def softmax_rows(z: np.ndarray, T: float = 1.0) -> np.ndarray:
    """Row-wise softmax of an (N, V) logit matrix."""
    z = np.asarray(z, dtype=np.float64)
    if not T > 0:
        raise UsageError(f"temperature must be positive, got {T}")
    e = np.exp((z - z.max(axis=1, keepdims=True)) / T)
    return e / np.array([math.fsum(row) for row in e])[:, None]


def two_token_prob(z1: float, z2: float) -> float:
    """Probability of the first of two tokens: ``sigmoid(z1 - z2)``.

    Example:
        >>> two_token_prob(0.0, 0.0)
        0.5
    """
    d = float(z1) - float(z2)
    if d >= 0:
        return 1.0 / (1.0 + math.exp(-d))
    e = math.exp(d)
    return e / (1.0 + e)
