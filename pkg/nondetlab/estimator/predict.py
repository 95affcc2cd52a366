"""Single-run prediction of per-token variation.

With i.i.d. N(0, s^2) noise on every logit, first-order propagation
through the softmax Jacobian gives

    sigma_i = s * p_i * sqrt((1 - p_i)^2 + sum_{j != i} p_j^2) / T

and the expected range over N runs is ``d_N * sigma_i``. The linearization
holds for small ``s``; predictions are always meant to be read next to a
validation report.
"""

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike

from nondetlab.errors import UsageError
from nondetlab.estimator.noise import NoiseScale, as_noise_scale
from nondetlab.estimator.range_factor import default_table
from nondetlab.softmax import DEFAULT_THRESHOLDS, ProbabilityVector, classify_regimes


def _as_probabilities(p: ProbabilityVector | ArrayLike, T: float | None) -> tuple[np.ndarray, float]:
    if isinstance(p, ProbabilityVector):
        return p.p, p.temperature if T is None else T
    vec = ProbabilityVector(np.asarray(p, dtype=np.float64), temperature=1.0 if T is None else T)
    return vec.p, vec.temperature


def predict_std(
    p: ProbabilityVector | ArrayLike,
    s: NoiseScale | float,
    T: float | None = None,
) -> np.ndarray:
    """Predicted per-token standard deviation of probabilities over runs.

    ``p`` may be a partial (top-k) slice; the other-token term then only
    covers the recorded tokens, a lower bound of the full-vocabulary sum.

    Args:
        p: One run's probabilities
        s: Logit noise scale
        T: Temperature (defaults to the ProbabilityVector's, else 1)

    Returns:
        (V,) predicted sigma
    """
    probs, T = _as_probabilities(p, T)
    s = as_noise_scale(s).s
    sq = probs * probs
    total = math.fsum(sq.tolist())
    others = np.maximum(total - sq, 0.0)
    return s * probs * np.sqrt((1.0 - probs) ** 2 + others) / T


def predict_range(
    p: ProbabilityVector | ArrayLike,
    s: NoiseScale | float,
    n_runs: int,
    T: float | None = None,
) -> np.ndarray:
    """Predicted per-token range over ``n_runs`` runs: ``d_N * sigma``."""
    if n_runs < 2:
        raise UsageError(f"range prediction needs n_runs >= 2, got {n_runs}")
    return default_table()[n_runs] * predict_std(p, s, T)


@dataclass(frozen=True, eq=False)
class Prediction:
    """Predicted variation of one step's tokens, with their regimes."""

    token_ids: np.ndarray
    prob: np.ndarray
    sigma: np.ndarray
    range: np.ndarray
    regime: np.ndarray
    n_runs: int
    noise: NoiseScale
    step_index: int = 0
    prompt_id: str = ""

    def __len__(self) -> int:
        return self.token_ids.size


def predict_tokens(
    p: ProbabilityVector | ArrayLike,
    s: NoiseScale | float,
    n_runs: int,
    *,
    token_ids: ArrayLike | None = None,
    thresholds: tuple[float, float] = DEFAULT_THRESHOLDS,
    T: float | None = None,
    step_index: int = 0,
    prompt_id: str = "",
) -> Prediction:
    """Sigma, range and regime predictions for one step of one run.

    Args:
        p: The run's probabilities at this step
        s: Logit noise scale
        n_runs: Ensemble size the range refers to
        token_ids: Vocabulary ids of ``p`` (default ``0..V-1``)
        thresholds: Regime thresholds
        T: Temperature override
        step_index: Step the probabilities come from
        prompt_id: Prompt the probabilities come from

    Returns:
        Prediction
    """
    noise = as_noise_scale(s)
    probs, _ = _as_probabilities(p, T)
    ids = np.arange(probs.size) if token_ids is None else np.asarray(token_ids, dtype=np.int64)
    if ids.shape != probs.shape:
        raise UsageError("token_ids must match the probabilities")
    sigma = predict_std(p, noise, T)
    return Prediction(
        token_ids=ids,
        prob=probs,
        sigma=sigma,
        range=predict_range(p, noise, n_runs, T),
        regime=classify_regimes(probs, thresholds),
        n_runs=n_runs,
        noise=noise,
        step_index=step_index,
        prompt_id=prompt_id,
    )
