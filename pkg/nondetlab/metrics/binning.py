"""Probability-binned profiles and distribution histograms."""

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from numpy.typing import ArrayLike

from nondetlab.errors import DataError, UsageError
from nondetlab.metrics.ensemble import VariationStats

DEFAULT_BIN_WIDTH = 0.05


@dataclass(frozen=True, eq=False)
class BinnedProfile:
    """Mean variation per probability bin.

    Empty bins have ``count == 0`` and NaN means; ``defined`` flags them.
    """

    bin_edges: np.ndarray
    mean_range: np.ndarray
    mean_sigma: np.ndarray
    count: np.ndarray
    quantity: str = "prob"

    @property
    def defined(self) -> np.ndarray:
        return self.count > 0

    @property
    def n_bins(self) -> int:
        return self.count.size

    def bins_within(self, lo: float, hi: float) -> np.ndarray:
        """Mask of bins lying entirely inside ``[lo, hi]``."""
        return (self.bin_edges[:-1] >= lo - 1e-12) & (self.bin_edges[1:] <= hi + 1e-12)

    def bins_overlapping(self, lo: float, hi: float) -> np.ndarray:
        """Mask of bins that intersect ``[lo, hi]`` with positive width."""
        return (self.bin_edges[:-1] < hi) & (self.bin_edges[1:] > lo)

    def pooled_mean_range(self, mask: np.ndarray) -> float:
        """Observation-weighted mean range over the selected bins (NaN if empty)."""
        counts = self.count[mask]
        total = int(counts.sum())
        if total == 0:
            return math.nan
        return float(np.sum(self.mean_range[mask][counts > 0] * counts[counts > 0]) / total)


@dataclass(frozen=True, eq=False)
class Histogram:
    """Counts per bin; bins are left-closed, right-open, the last one closed."""

    edges: np.ndarray
    counts: np.ndarray
    total: int
    out_of_range: int = 0

    @property
    def fractions(self) -> np.ndarray:
        """Counts normalized by the in-range total; NaN when nothing was counted."""
        if self.total == 0:
            return np.full(self.counts.shape, np.nan)
        return self.counts / self.total

    @property
    def defined(self) -> bool:
        return self.total > 0


def probability_edges(bin_width: float = DEFAULT_BIN_WIDTH) -> np.ndarray:
    """Edges ``0, w, 2w, ..., 1``; the last bin is shorter if 1/w is not whole."""
    if not 0 < bin_width <= 1:
        raise UsageError(f"bin width must be in (0, 1], got {bin_width}")
    n = max(1, math.ceil(1.0 / bin_width - 1e-9))
    edges = np.round(np.arange(n + 1) * bin_width, 12)
    edges[-1] = 1.0
    return np.minimum(edges, 1.0)


def _bin_index(values: np.ndarray, edges: np.ndarray) -> np.ndarray:
    idx = np.searchsorted(edges, values, side="right") - 1
    # the right edge belongs to the last bin
    return np.where(values == edges[-1], edges.size - 2, idx)


def bin_by_probability(
    stats: Iterable[VariationStats],
    bin_width: float = DEFAULT_BIN_WIDTH,
    quantity: str = "prob",
) -> BinnedProfile:
    """Pool (token, step) observations into mean-probability bins.

    Args:
        stats: VariationStats of any number of steps and prompts
        bin_width: Width of each probability bin
        quantity: ``"prob"`` bins probability variation, ``"logit"`` bins
            logit variation (by the same mean probability)

    Returns:
        BinnedProfile with per-bin means of range and sigma
    """
    if quantity not in ("prob", "logit"):
        raise UsageError(f"quantity must be 'prob' or 'logit', got '{quantity}'")
    edges = probability_edges(bin_width)
    means, ranges, sigmas = [], [], []
    for s in stats:
        if quantity == "logit":
            if not s.has_logits:
                continue
            keep = np.isfinite(s.logit_range)
            means.append(s.mean_prob[keep])
            ranges.append(s.logit_range[keep])
            sigmas.append(s.logit_sigma[keep])
        else:
            means.append(s.mean_prob)
            ranges.append(s.range)
            sigmas.append(s.sigma)

    n_bins = edges.size - 1
    count = np.zeros(n_bins, dtype=np.int64)
    mean_range = np.full(n_bins, np.nan)
    mean_sigma = np.full(n_bins, np.nan)
    if means:
        p = np.concatenate(means)
        r = np.concatenate(ranges)
        sd = np.concatenate(sigmas)
        idx = _bin_index(p, edges)
        for b in range(n_bins):
            sel = idx == b
            count[b] = int(sel.sum())
            if count[b]:
                mean_range[b] = math.fsum(r[sel]) / count[b]
                mean_sigma[b] = math.fsum(sd[sel]) / count[b]

    return BinnedProfile(edges, mean_range, mean_sigma, count, quantity)


def distribution_histogram(values: Sequence[float] | ArrayLike, edges: Sequence[float] | ArrayLike) -> Histogram:
    """Histogram of ``values`` over ``edges``.

    A value equal to an inner edge goes to the bin that edge opens; a value
    equal to the last edge goes to the last bin. Values outside the edges
    are counted in ``out_of_range``.

    Args:
        values: Observations
        edges: Strictly increasing bin edges (at least 2)

    Returns:
        Histogram with counts and fractions
    """
    edges = np.asarray(edges, dtype=np.float64)
    if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
        raise UsageError("histogram edges must be strictly increasing (at least 2)")
    values = np.asarray(values, dtype=np.float64).ravel()
    if np.isnan(values).any():
        raise DataError("histogram values contain NaN")
    inside = (values >= edges[0]) & (values <= edges[-1])
    idx = _bin_index(values[inside], edges)
    counts = np.bincount(idx, minlength=edges.size - 1).astype(np.int64)
    return Histogram(edges, counts, int(inside.sum()), int((~inside).sum()))
