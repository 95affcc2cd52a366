"""Compare predicted variation against an observed ensemble."""

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from nondetlab.errors import DataError
from nondetlab.estimator.predict import Prediction
from nondetlab.log import get_logger
from nondetlab.metrics import VariationStats
from nondetlab.softmax import SensitivityRegime

logger = get_logger(__name__)

ALL_TOKENS = "all"


def relative_error(predicted: np.ndarray, observed: np.ndarray) -> np.ndarray:
    """``|predicted - observed| / observed``; 0 when both are 0, inf when only observed is."""
    predicted = np.asarray(predicted, dtype=np.float64)
    observed = np.asarray(observed, dtype=np.float64)
    diff = np.abs(predicted - observed)
    with np.errstate(divide="ignore", invalid="ignore"):
        err = diff / observed
    err[observed == 0] = np.where(diff[observed == 0] == 0, 0.0, np.inf)
    return err


@dataclass(frozen=True)
class RegimeError:
    """Relative-error summary of one sensitivity regime."""

    regime: str
    count: int
    sigma_median: float
    sigma_p90: float
    range_median: float
    range_p90: float

    @classmethod
    def from_errors(cls, regime: str, sigma_err: np.ndarray, range_err: np.ndarray) -> "RegimeError":
        if sigma_err.size == 0:
            nan = float("nan")
            return cls(regime, 0, nan, nan, nan, nan)
        return cls(
            regime=regime,
            count=int(sigma_err.size),
            sigma_median=float(np.median(sigma_err)),
            sigma_p90=float(np.percentile(sigma_err, 90, method="higher")),
            range_median=float(np.median(range_err)),
            range_p90=float(np.percentile(range_err, 90, method="higher")),
        )


@dataclass(frozen=True)
class ErrorReport:
    """Per-regime relative errors of sigma and range predictions.

    ``regimes`` holds one entry per sensitivity regime plus ``all``; the
    amplified mid regime is the one budgets are checked against, since
    saturated tokens have near-zero denominators.
    """

    regimes: dict[str, RegimeError] = field(default_factory=dict)
    matched: int = 0
    unmatched: int = 0

    @property
    def mid(self) -> RegimeError:
        return self.regimes[SensitivityRegime.AMPLIFIED_MID.value]

    def gate(self) -> RegimeError:
        """Regime the budget applies to: mid, or all tokens when mid is empty."""
        mid = self.regimes.get(SensitivityRegime.AMPLIFIED_MID.value)
        if mid is not None and mid.count:
            return mid
        return self.regimes[ALL_TOKENS]

    def within_budget(self, budget: float) -> bool:
        """Whether the gated median errors of sigma and range are both <= budget."""
        g = self.gate()
        if g.count == 0:
            return True
        return g.sigma_median <= budget and g.range_median <= budget


def _key_rows(observed: Iterable[VariationStats]) -> dict[tuple[str, int, int], tuple[float, float]]:
    rows = {}
    for stats in observed:
        for j, token in enumerate(stats.token_ids):
            rows[(stats.prompt_id, stats.step_index, int(token))] = (float(stats.sigma[j]), float(stats.range[j]))
    return rows


def validate_estimate(
    predicted: Prediction | Sequence[Prediction],
    observed: VariationStats | Sequence[VariationStats],
    regime_filter: Iterable[str] | None = None,
) -> ErrorReport:
    """Relative errors of predictions against observed ensemble statistics.

    Predictions and observations are matched on (prompt, step, token);
    tokens present on only one side are counted as unmatched. Each token
    is filed under the regime of its predicted probability.

    Args:
        predicted: Predictions for one or more steps
        observed: Observed statistics for one or more steps
        regime_filter: Regimes to report (default: all three)

    Returns:
        ErrorReport

    Raises:
        DataError: If no token is present on both sides
    """
    if isinstance(predicted, Prediction):
        predicted = [predicted]
    if isinstance(observed, VariationStats):
        observed = [observed]
    wanted = {SensitivityRegime(r).value for r in regime_filter} if regime_filter is not None else {
        r.value for r in SensitivityRegime
    }

    obs = _key_rows(observed)
    pred_sigma, pred_range, obs_sigma, obs_range, regimes = [], [], [], [], []
    seen = 0
    for pred in predicted:
        for j, token in enumerate(pred.token_ids):
            seen += 1
            hit = obs.get((pred.prompt_id, pred.step_index, int(token)))
            if hit is None:
                continue
            pred_sigma.append(pred.sigma[j])
            pred_range.append(pred.range[j])
            obs_sigma.append(hit[0])
            obs_range.append(hit[1])
            regimes.append(pred.regime[j])

    matched = len(regimes)
    if matched == 0:
        raise DataError("predictions and observations share no (prompt, step, token)")
    unmatched = (seen - matched) + (len(obs) - matched)
    if unmatched:
        logger.warning("%d tokens present on only one side were skipped", unmatched)

    sigma_err = relative_error(np.array(pred_sigma), np.array(obs_sigma))
    range_err = relative_error(np.array(pred_range), np.array(obs_range))
    labels = np.array(regimes, dtype=object)
    keep = np.isin(labels, list(wanted))

    report = {
        r.value: RegimeError.from_errors(r.value, sigma_err[labels == r.value], range_err[labels == r.value])
        for r in SensitivityRegime
        if r.value in wanted
    }
    report[ALL_TOKENS] = RegimeError.from_errors(ALL_TOKENS, sigma_err[keep], range_err[keep])
    return ErrorReport(regimes=report, matched=matched, unmatched=unmatched)
