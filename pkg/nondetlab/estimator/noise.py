"""Logit-noise scale: supplied by the user or calibrated from an ensemble."""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable

import numpy as np

from nondetlab.errors import DataError, UsageError
from nondetlab.log import get_logger
from nondetlab.metrics import RunEnsemble

logger = get_logger(__name__)


class NoiseSource(str, Enum):
    CALIBRATED = "calibrated_from_ensemble"
    USER_SUPPLIED = "user_supplied"


@dataclass(frozen=True)
class NoiseScale:
    """Per-logit standard deviation of run-to-run perturbation."""

    s: float
    source: NoiseSource = NoiseSource.USER_SUPPLIED

    def __post_init__(self):
        s = float(self.s)
        if not math.isfinite(s) or s < 0:
            raise UsageError(f"noise scale must be finite and non-negative, got {self.s}")
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "source", NoiseSource(self.source))

    def __float__(self) -> float:
        return self.s


def as_noise_scale(s: "NoiseScale | float") -> NoiseScale:
    return s if isinstance(s, NoiseScale) else NoiseScale(float(s))


def calibrate_noise(ensembles: Iterable[RunEnsemble], include_imputed: bool = False) -> NoiseScale:
    """Median over (step, token) cells of the logits' sample standard deviation.

    Cells are the ensemble columns with a recorded logit in every run;
    imputed columns are skipped unless ``include_imputed`` is set.

    Args:
        ensembles: Ensembles carrying logits
        include_imputed: Also use partly imputed columns

    Returns:
        NoiseScale tagged as calibrated

    Raises:
        DataError: If no ensemble carries usable logits
    """
    cells = []
    for e in ensembles:
        if not e.has_logits:
            continue
        if e.n_runs < 2:
            raise DataError("noise calibration needs ensembles of at least 2 runs")
        z = e.logits[:, e.column_mask(include_imputed)]
        z = z[:, np.all(np.isfinite(z), axis=0)]
        if z.size:
            cells.append(np.std(z, axis=0, ddof=1))
    if not cells:
        raise DataError(
            "no logits to calibrate from; supply the noise scale with --noise-scale"
        )
    sigmas = np.concatenate(cells)
    s = float(np.median(sigmas))
    logger.debug("calibrated logit noise s=%.6g from %d cells", s, sigmas.size)
    return NoiseScale(s, NoiseSource.CALIBRATED)
