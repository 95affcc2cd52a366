"""Tail fractions and rank flips across runs."""

from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike

from nondetlab.errors import DataError
from nondetlab.metrics.ensemble import RunEnsemble

DEFAULT_TAIL_THRESHOLDS = (1e-4, 1e-3, 1e-2, 5e-2)


def tail_fractions(
    values: Sequence[float] | ArrayLike,
    thresholds: Sequence[float] = DEFAULT_TAIL_THRESHOLDS,
) -> dict[float, float]:
    """Fraction of observations strictly below each threshold.

    Returns NaN fractions when there are no observations.
    """
    values = np.asarray(values, dtype=np.float64).ravel()
    if values.size == 0:
        return {float(t): float("nan") for t in thresholds}
    return {float(t): float(np.count_nonzero(values < t) / values.size) for t in thresholds}


def rank_flip_rate(e: RunEnsemble, include_imputed: bool = False) -> float:
    """Fraction of runs whose ordering of the ensemble's tokens differs from the first run's.

    Ties are broken by token id, so identical rows never count as flips.
    """
    if e.n_runs < 2:
        raise DataError("rank flips need at least 2 runs")
    cols = np.flatnonzero(e.column_mask(include_imputed))
    if cols.size < 2:
        return 0.0
    ids = e.token_ids[cols]
    orders = [tuple(ids[np.lexsort((ids, -row[cols]))]) for row in e.probs]
    flips = sum(1 for o in orders[1:] if o != orders[0])
    return flips / (e.n_runs - 1)
