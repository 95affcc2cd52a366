"""Run ensembles and their per-token variation summaries."""

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike

from nondetlab.errors import DataError


def _frozen(a: ArrayLike, dtype) -> np.ndarray:
    arr = np.array(a, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class RunEnsemble:
    """Token probabilities of N runs at one generation step.

    Attributes:
        probs: (N, V) probabilities, one row per run
        token_ids: (V,) vocabulary ids of the columns
        step_index: Generation step
        logits: Optional (N, V) logits; NaN where a run did not record one
        imputed: (V,) True for columns filled in for runs that lacked the token
        prompt_id: Prompt the ensemble belongs to
        run_ids: Optional run labels, one per row
    """

    probs: np.ndarray
    token_ids: np.ndarray
    step_index: int = 0
    logits: np.ndarray | None = None
    imputed: np.ndarray | None = None
    prompt_id: str = ""
    run_ids: tuple[str, ...] = field(default=())

    def __post_init__(self):
        probs = _frozen(self.probs, np.float64)
        if probs.ndim != 2:
            raise DataError("ensemble probabilities must be an (N, V) matrix")
        if np.any(~np.isfinite(probs)) or np.any(probs < 0) or np.any(probs > 1):
            raise DataError("probability out of range in ensemble")
        object.__setattr__(self, "probs", probs)

        token_ids = _frozen(self.token_ids, np.int64)
        if token_ids.shape != (probs.shape[1],):
            raise DataError("token_ids must have one entry per column")
        object.__setattr__(self, "token_ids", token_ids)

        if self.logits is not None:
            logits = _frozen(self.logits, np.float64)
            if logits.shape != probs.shape:
                raise DataError("logits must have the same shape as probabilities")
            object.__setattr__(self, "logits", logits)

        imputed = np.zeros(probs.shape[1], dtype=bool) if self.imputed is None else self.imputed
        imputed = _frozen(imputed, bool)
        if imputed.shape != token_ids.shape:
            raise DataError("imputed mask must have one entry per column")
        object.__setattr__(self, "imputed", imputed)
        object.__setattr__(self, "run_ids", tuple(str(r) for r in self.run_ids))

    @property
    def n_runs(self) -> int:
        return self.probs.shape[0]

    @property
    def n_tokens(self) -> int:
        return self.probs.shape[1]

    @property
    def has_logits(self) -> bool:
        return self.logits is not None

    def column_mask(self, include_imputed: bool = False) -> np.ndarray:
        """Columns that take part in metric computation."""
        if include_imputed:
            return np.ones(self.n_tokens, dtype=bool)
        return ~self.imputed


@dataclass(frozen=True, eq=False)
class VariationStats:
    """Per-token variation of one step's ensemble.

    ``sigma`` is the population (1/N) standard deviation and ``range`` is
    max - min, both over runs. Logit statistics are present when the
    ensemble carried logits for every run.
    """

    sigma: np.ndarray
    range: np.ndarray
    mean_prob: np.ndarray
    token_ids: np.ndarray
    n_runs: int
    step_index: int = 0
    prompt_id: str = ""
    logit_sigma: np.ndarray | None = None
    logit_range: np.ndarray | None = None

    def __post_init__(self):
        for name in ("sigma", "range", "mean_prob"):
            object.__setattr__(self, name, _frozen(getattr(self, name), np.float64))
        object.__setattr__(self, "token_ids", _frozen(self.token_ids, np.int64))
        for name in ("logit_sigma", "logit_range"):
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, _frozen(value, np.float64))

    def __len__(self) -> int:
        return self.token_ids.size

    @property
    def has_logits(self) -> bool:
        return self.logit_range is not None
