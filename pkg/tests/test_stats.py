"""Tests for ensemble statistics."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nondetlab.errors import DataError, UsageError
from nondetlab.metrics import RunEnsemble, ensemble_stats, prob_range, se_std, std_dev

GRID = [round(0.05 * i, 2) for i in range(21)]


def brute_force_stats(probs):
    """Per-column (sigma, range, mean) computed with plain loops."""
    n, v = len(probs), len(probs[0])
    out = []
    for j in range(v):
        xs = [float(probs[i][j]) for i in range(n)]
        mean = math.fsum(xs) / n
        spread = max(xs) - min(xs)
        sigma = 0.0
        if spread > 0:
            sigma = min(math.sqrt(math.fsum((x - mean) ** 2 for x in xs) / n), spread / 2)
        out.append((sigma, spread, mean))
    return out


def assert_matches_brute_force(probs):
    stats = ensemble_stats(RunEnsemble(probs=probs, token_ids=range(len(probs[0]))))
    for j, (sigma, rng_, mean) in enumerate(brute_force_stats(probs)):
        assert stats.sigma[j] == sigma
        assert stats.range[j] == rng_
        assert stats.mean_prob[j] == mean


class TestStdDev:
    def test_two_sample_fixture(self):
        assert std_dev([0.2, 0.4]) == pytest.approx(0.1, rel=1e-15)

    def test_population_divisor(self):
        assert std_dev([1.0, 2.0, 3.0, 4.0]) == pytest.approx(math.sqrt(1.25))

    def test_constant_samples(self):
        assert std_dev([0.3] * 7) == 0.0

    @pytest.mark.parametrize("c", [0.030147759003150535, 0.055529040835877314, 0.1, 1 / 3, 0.7])
    def test_constant_samples_are_exactly_zero(self, c):
        # fsum(xs) / n is not exactly c for these values
        for n in (2, 3, 5, 7, 50):
            assert std_dev([c] * n) == 0.0

    @given(st.floats(0.0, 1.0), st.integers(2, 60))
    def test_constant_samples_any_value(self, c, n):
        assert std_dev([c] * n) == 0.0

    def test_declared_count_must_match(self):
        with pytest.raises(UsageError):
            std_dev([0.1, 0.2], n=3)

    def test_needs_two_samples(self):
        with pytest.raises(DataError):
            std_dev([0.5])

    def test_order_independent(self, rng):
        xs = rng.uniform(0, 1, 50)
        assert std_dev(xs) == std_dev(rng.permutation(xs))

    def test_sigma_at_most_half_range(self, rng):
        for _ in range(100_000 // 10):
            batch = rng.uniform(0, 1, (10, int(rng.integers(2, 12))))
            for xs in batch:
                assert std_dev(xs) <= prob_range(xs) / 2


class TestRangeAndStandardError:
    def test_range(self):
        assert prob_range([0.2, 0.9, 0.4]) == pytest.approx(0.7)
        with pytest.raises(DataError):
            prob_range([])

    def test_se_formula(self):
        assert se_std(1.0, 50) == pytest.approx(1 / math.sqrt(98))
        with pytest.raises(UsageError):
            se_std(1.0, 1)

    def test_se_matches_resampling(self):
        rng = np.random.default_rng(11)
        sigma, n = 2.0, 50
        estimates = [std_dev(rng.normal(0, sigma, n)) for _ in range(10_000)]
        empirical = float(np.std(estimates, ddof=1))
        assert empirical == pytest.approx(se_std(sigma, n), rel=0.2)


class TestEnsembleStats:
    @given(
        st.integers(2, 8).flatmap(
            lambda n: st.integers(1, 4).flatmap(
                lambda v: st.lists(st.lists(st.sampled_from(GRID), min_size=v, max_size=v), min_size=n, max_size=n)
            )
        )
    )
    @settings(max_examples=500)
    def test_grid_ensembles_match_brute_force(self, probs):
        assert_matches_brute_force(probs)

    def test_random_ensembles_match_brute_force(self, rng):
        for _ in range(10_000):
            n, v = int(rng.integers(2, 9)), int(rng.integers(1, 5))
            assert_matches_brute_force(rng.uniform(0, 1, (n, v)).tolist())

    def test_identical_runs_have_zero_variation(self):
        stats = ensemble_stats(RunEnsemble(probs=[[0.7, 0.2, 0.1]] * 5, token_ids=[4, 8, 9]))
        assert np.all(stats.sigma == 0) and np.all(stats.range == 0)
        assert list(stats.token_ids) == [4, 8, 9]

    def test_constant_column_sigma_within_half_range(self):
        stats = ensemble_stats(RunEnsemble(probs=[[0.055529040835877314, 0.5]] * 5, token_ids=[0, 1]))
        assert np.all(stats.sigma == 0.0)
        assert np.all(stats.sigma <= stats.range / 2)

    def test_imputed_columns_are_skipped_by_default(self):
        e = RunEnsemble(
            probs=[[0.6, 0.3], [0.5, 0.0]],
            token_ids=[1, 2],
            imputed=[False, True],
        )
        assert list(ensemble_stats(e).token_ids) == [1]
        assert list(ensemble_stats(e, include_imputed=True).token_ids) == [1, 2]

    def test_logit_statistics(self):
        e = RunEnsemble(
            probs=[[0.6, 0.4], [0.5, 0.5]],
            token_ids=[0, 1],
            logits=[[1.0, np.nan], [1.5, 0.2]],
        )
        stats = ensemble_stats(e)
        assert stats.logit_range[0] == 0.5
        assert stats.logit_sigma[0] == 0.25
        assert math.isnan(stats.logit_range[1])

    def test_needs_two_runs(self):
        with pytest.raises(DataError):
            ensemble_stats(RunEnsemble(probs=[[0.5, 0.5]], token_ids=[0, 1]))

    def test_rejects_out_of_range_probabilities(self):
        with pytest.raises(DataError):
            RunEnsemble(probs=[[0.5, 1.2], [0.5, 0.5]], token_ids=[0, 1])
