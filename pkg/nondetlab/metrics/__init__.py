"""Variation metrics over run ensembles."""

from nondetlab.metrics.binning import (
    DEFAULT_BIN_WIDTH,
    BinnedProfile,
    Histogram,
    bin_by_probability,
    distribution_histogram,
    probability_edges,
)
from nondetlab.metrics.ensemble import RunEnsemble, VariationStats
from nondetlab.metrics.stats import ensemble_stats, prob_range, se_std, std_dev
from nondetlab.metrics.summary import DEFAULT_TAIL_THRESHOLDS, rank_flip_rate, tail_fractions

__all__ = [
    "DEFAULT_BIN_WIDTH",
    "DEFAULT_TAIL_THRESHOLDS",
    "BinnedProfile",
    "Histogram",
    "RunEnsemble",
    "VariationStats",
    "bin_by_probability",
    "distribution_histogram",
    "ensemble_stats",
    "prob_range",
    "probability_edges",
    "rank_flip_rate",
    "se_std",
    "std_dev",
    "tail_fractions",
]
