"""Standard deviation, range and standard-error metrics over runs."""

import math
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike

from nondetlab.errors import DataError, UsageError
from nondetlab.metrics.ensemble import RunEnsemble, VariationStats


def _as_samples(samples: Sequence[float] | ArrayLike) -> list[float]:
    return [float(x) for x in np.asarray(samples, dtype=np.float64).ravel()]


def std_dev(samples: Sequence[float] | ArrayLike, n: int | None = None) -> float:
    """Population standard deviation ``sqrt(1/N * sum((x - mean)^2))``.

    Two passes, each summed exactly with ``math.fsum``; the result does not
    depend on sample order. A constant sample gives exactly 0, and the
    result never exceeds half the range ``(max - min) / 2``.

    Args:
        samples: The N observations
        n: Optional declared sample count; must equal ``len(samples)``

    Returns:
        sigma >= 0

    Example:
        >>> round(std_dev([0.2, 0.4]), 15)
        0.1
    """
    xs = _as_samples(samples)
    if n is not None and n != len(xs):
        raise UsageError(f"declared n={n} but got {len(xs)} samples")
    if len(xs) < 2:
        raise DataError("standard deviation needs at least 2 samples")
    spread = max(xs) - min(xs)
    if spread == 0:
        return 0.0
    count = len(xs)
    mean = math.fsum(xs) / count
    # a rounded mean can push sigma past half the range
    return min(math.sqrt(math.fsum((x - mean) ** 2 for x in xs) / count), spread / 2)


def prob_range(samples: Sequence[float] | ArrayLike) -> float:
    """Spread ``max - min`` of the samples."""
    xs = _as_samples(samples)
    if not xs:
        raise DataError("range needs at least 1 sample")
    return max(xs) - min(xs)


def se_std(sigma: float, n: int) -> float:
    """Approximate standard error of an estimated standard deviation.

    ``sigma / sqrt(2 (N - 1))``; with N = 50 this is about 0.101 sigma.
    """
    if n < 2:
        raise UsageError("standard error needs n >= 2")
    if sigma < 0:
        raise UsageError("sigma must be non-negative")
    return sigma / math.sqrt(2 * (n - 1))


def ensemble_stats(e: RunEnsemble, include_imputed: bool = False) -> VariationStats:
    """Per-token sigma, range and mean probability of one ensemble.

    Args:
        e: Ensemble with at least 2 runs
        include_imputed: Keep columns whose values were partly imputed

    Returns:
        VariationStats over the selected columns
    """
    if e.n_runs < 2:
        raise DataError("ensemble metrics need at least 2 runs")
    cols = np.flatnonzero(e.column_mask(include_imputed))
    sigma, rng, mean = [], [], []
    for j in cols:
        column = e.probs[:, j]
        sigma.append(std_dev(column))
        rng.append(prob_range(column))
        mean.append(math.fsum(float(x) for x in column) / e.n_runs)

    logit_sigma = logit_range = None
    if e.has_logits:
        logit_sigma, logit_range = [], []
        for j in cols:
            column = e.logits[:, j]
            if np.isfinite(column).all():
                logit_sigma.append(std_dev(column))
                logit_range.append(prob_range(column))
            else:
                logit_sigma.append(math.nan)
                logit_range.append(math.nan)

    return VariationStats(
        sigma=sigma,
        range=rng,
        mean_prob=mean,
        token_ids=e.token_ids[cols],
        n_runs=e.n_runs,
        step_index=e.step_index,
        prompt_id=e.prompt_id,
        logit_sigma=logit_sigma,
        logit_range=logit_range,
    )
