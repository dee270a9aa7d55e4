"""Subset sampler and marginals against brute-force enumeration."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coordplay import kdpp
from coordplay.errors import InvalidInputError

import oracles


def sample_batch(weights, k, n, seed, backend):
    rng = np.random.default_rng(seed)
    return kdpp.sample_many(weights, k, n, rng, backend=backend)


class TestEspTable:
    def test_unit_weights_give_binomials(self):
        table = kdpp.build_esp_table([1.0, 1.0, 1.0], 2)
        assert table.normalizer == 3.0  # C(3, 2)
        for n in range(4):
            for k in range(3):
                assert table.table[n, k] == math.comb(n, k)

    def test_small_example(self):
        # pairs of (1, 2, 3): 1*2 + 1*3 + 2*3 = 11
        assert kdpp.build_esp_table([1.0, 2.0, 3.0], 2).normalizer == 11.0

    def test_order_zero_is_one(self):
        table = kdpp.build_esp_table([0.3, 0.7, 0.1, 2.0], 0)
        assert table.normalizer == 1.0

    def test_rejects_k_above_n(self):
        with pytest.raises(InvalidInputError):
            kdpp.build_esp_table([1.0, 1.0], 3)

    def test_rejects_negative_and_nonfinite(self):
        with pytest.raises(InvalidInputError):
            kdpp.build_esp_table([1.0, -0.5], 1)
        with pytest.raises(InvalidInputError):
            kdpp.build_esp_table([1.0, float("nan")], 1)

    @given(st.lists(st.floats(0.01, 5.0), min_size=1, max_size=9),
           st.integers(0, 4))
    @settings(max_examples=60, deadline=None)
    def test_recurrence_and_bruteforce(self, weights, k):
        k = min(k, len(weights))
        table = kdpp.build_esp_table(weights, k).table
        n = len(weights)
        for i in range(1, n + 1):
            for j in range(1, k + 1):
                expected = table[i - 1, j] + weights[i - 1] * table[i - 1, j - 1]
                assert table[i, j] == pytest.approx(expected, rel=1e-12)
        assert table[n, k] == pytest.approx(oracles.esp_bruteforce(weights, k),
                                            rel=1e-12)
        assert np.all(table >= 0.0)


class TestStabilize:
    def test_equal_estimates_become_unit_weights(self):
        np.testing.assert_array_equal(kdpp.stabilize([5.0, 5.0, 5.0], 0.3),
                                      np.ones(3))

    def test_direct_evaluation(self):
        w = kdpp.stabilize([10.0, 11.0, 12.0], 1.0)
        np.testing.assert_allclose(w, [1.0, math.exp(-1.0), math.exp(-2.0)])

    def test_max_weight_is_exactly_one(self):
        rng = np.random.default_rng(0)
        w = kdpp.stabilize(rng.uniform(0, 1e4, size=12), 0.01)
        assert w.max() == 1.0
        assert np.all(w > 0.0) and np.all(w <= 1.0)

    def test_shift_invariance_of_subset_distribution(self):
        est = [3.0, 1.0, 4.0, 1.5]
        for shift in (0.0, 100.0, -7.5):
            shifted = [x + shift for x in est]
            probs = oracles.subset_probabilities(kdpp.stabilize(shifted, 0.8), 2)
            base = oracles.subset_probs_from_estimates(est, 0.8, 2)
            for combo, p in base.items():
                assert probs[combo] == pytest.approx(p, rel=1e-12)

    def test_rejects_nonfinite(self):
        with pytest.raises(InvalidInputError):
            kdpp.stabilize([1.0, float("inf")], 0.1)
        with pytest.raises(InvalidInputError):
            kdpp.stabilize([1.0, 2.0], 0.0)

    def test_extreme_spread_concentrates(self):
        # second arm's weight underflows; subsets avoid it whenever possible
        w = kdpp.stabilize([0.0, 1e6], 1.0)
        assert w[0] == 1.0 and w[1] == 0.0
        rng = np.random.default_rng(1)
        assert kdpp.sample_k_subset(w, 1, rng) == (0,)
        # with k = n the unique subset is unchanged
        assert kdpp.sample_k_subset(w, 2, rng) == (0, 1)


class TestSampling:
    def test_uniform_weights_uniform_subsets(self, backend):
        samples = sample_batch(np.ones(3), 2, 30000, 11, backend)
        exact = oracles.subset_probabilities(np.ones(3), 2)
        assert oracles.empirical_tv(samples, exact) < 0.02

    def test_skewed_example_frequencies(self, backend):
        # exact: Pr{0,1}=1/5, Pr{0,2}=2/5, Pr{1,2}=2/5
        w = np.array([1.0, 1.0, 2.0])
        exact = oracles.subset_probabilities(w, 2)
        assert exact[(0, 1)] == pytest.approx(0.2)
        assert exact[(0, 2)] == pytest.approx(0.4)
        samples = sample_batch(w, 2, 50000, 12, backend)
        assert oracles.empirical_tv(samples, exact) < 0.02

    def test_full_set_when_k_equals_n(self, backend):
        samples = sample_batch(np.array([0.3, 0.9, 0.5]), 3, 50, 13, backend)
        assert np.all(samples == np.array([0, 1, 2]))

    def test_members_distinct_and_sorted(self, backend):
        rng = np.random.default_rng(14)
        w = rng.uniform(0.05, 1.0, size=7)
        samples = sample_batch(w, 3, 500, 15, backend)
        for row in samples:
            assert list(row) == sorted(set(row))

    def test_degenerate_zero_weights_fill_uniformly(self, backend):
        # one positive weight, k=2: partner arm uniform among the zeros
        w = np.array([0.0, 1.0, 0.0, 0.0])
        samples = sample_batch(w, 2, 30000, 16, backend)
        assert np.all(np.any(samples == 1, axis=1))
        partners = samples.ravel()[samples.ravel() != 1]
        freqs = np.bincount(partners, minlength=4)[[0, 2, 3]] / len(partners)
        np.testing.assert_allclose(freqs, 1.0 / 3.0, atol=0.02)

    def test_rejects_bad_k(self):
        rng = np.random.default_rng(0)
        with pytest.raises(InvalidInputError):
            kdpp.sample_k_subset([1.0, 1.0], 0, rng)
        with pytest.raises(InvalidInputError):
            kdpp.sample_k_subset([1.0, 1.0], 3, rng)

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=30, deadline=None)
    def test_random_instances_match_enumeration(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 7))
        k = int(rng.integers(1, n + 1))
        w = rng.uniform(0.05, 2.0, size=n)
        exact = oracles.subset_probabilities(w, k)
        samples = kdpp.sample_many(w, k, 4000, rng)
        assert oracles.empirical_tv(samples, exact) < 0.06


class TestMarginals:
    def test_uniform_weights_give_k_over_n(self):
        for i in range(5):
            assert kdpp.marginal_inclusion(np.ones(5), 2, i) == pytest.approx(0.4)

    def test_skewed_examples(self):
        w = [1.0, 1.0, 2.0]
        assert kdpp.marginal_inclusion(w, 2, 2) == pytest.approx(0.8)
        assert kdpp.marginal_inclusion(w, 2, 0) == pytest.approx(0.6)
        assert sum(kdpp.all_marginals(w, 2)) == pytest.approx(2.0, rel=1e-12)

    @given(st.lists(st.floats(0.01, 3.0), min_size=2, max_size=8),
           st.integers(1, 4))
    @settings(max_examples=60, deadline=None)
    def test_matches_bruteforce_and_sums_to_k(self, weights, k):
        k = min(k, len(weights))
        margs = kdpp.all_marginals(weights, k)
        for i in range(len(weights)):
            assert margs[i] == pytest.approx(
                oracles.marginal_bruteforce(weights, k, i), rel=1e-9)
            assert 0.0 <= margs[i] <= 1.0
        assert margs.sum() == pytest.approx(k, rel=1e-9)

    def test_degenerate_zero_weight_marginals(self):
        w = [0.0, 1.0, 0.0, 0.0]
        assert kdpp.marginal_inclusion(w, 2, 1) == 1.0
        for i in (0, 2, 3):
            assert kdpp.marginal_inclusion(w, 2, i) == pytest.approx(1.0 / 3.0)
        assert kdpp.all_marginals(w, 2).sum() == pytest.approx(2.0)

    def test_rejects_bad_arm(self):
        with pytest.raises(InvalidInputError):
            kdpp.marginal_inclusion([1.0, 1.0], 1, 2)
