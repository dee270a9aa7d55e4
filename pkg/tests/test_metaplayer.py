"""Subset learner: draw distribution, estimator identities, idealized runs."""

import numpy as np
import pytest

from coordplay import kdpp, metaplayer
from coordplay.adversaries import LossSchedule
from coordplay.engine import idealized_eta as metaplayer_eta
from coordplay.errors import InvalidInputError

import oracles


def drawn_counts(state, n_draws, seed):
    rng = np.random.default_rng(seed)
    counts = {}
    firsts = {}
    for _ in range(n_draws):
        meta = metaplayer.draw_meta_arm(state, rng)
        key = tuple(sorted(meta.order))
        counts[key] = counts.get(key, 0) + 1
        firsts[meta.order[0]] = firsts.get(meta.order[0], 0) + 1
    return counts, firsts


class TestDrawMetaArm:
    def test_fresh_state_symmetry(self):
        state = metaplayer.fresh_state(3, 2, eta=0.1)
        counts, firsts = drawn_counts(state, 30000, 21)
        for combo in ((0, 1), (0, 2), (1, 2)):
            assert counts[combo] / 30000 == pytest.approx(1 / 3, abs=0.02)
        for arm in range(3):
            assert firsts[arm] / 30000 == pytest.approx(1 / 3, abs=0.02)

    def test_heavily_beaten_arms_are_avoided(self):
        # arms 1 and 2 carry +10/eta estimate: arm 0 almost surely included
        eta = 0.05
        state = metaplayer.fresh_state(3, 2, eta=eta)
        state.cumulative[:] = [0.0, 10.0 / eta, 10.0 / eta]
        marg = kdpp.marginal_inclusion(state.weights(), 2, 0)
        assert marg > 0.99
        counts, _ = drawn_counts(state, 4000, 22)
        included = sum(c for combo, c in counts.items() if 0 in combo)
        assert included / 4000 > 0.99

    def test_k_equals_n_always_full_set(self):
        state = metaplayer.fresh_state(4, 4, eta=0.1)
        state.cumulative[:] = [3.0, 1.0, 4.0, 1.0]
        counts, _ = drawn_counts(state, 200, 23)
        assert set(counts) == {(0, 1, 2, 3)}

    def test_subset_frequencies_match_enumeration(self):
        state = metaplayer.fresh_state(5, 2, eta=0.7)
        state.cumulative[:] = [0.5, 1.5, 0.1, 2.5, 1.0]
        exact = oracles.subset_probs_from_estimates(state.cumulative, 0.7, 2)
        counts, _ = drawn_counts(state, 100000, 24)
        tv = 0.5 * sum(abs(counts.get(combo, 0) / 100000 - p)
                       for combo, p in exact.items())
        assert tv < 0.02


class TestEstimator:
    def test_single_nonzero_entry_value(self):
        # K=2, observed value 0.5 at an arm with marginal 0.5 -> estimate 2.0
        state = metaplayer.fresh_state(4, 2, eta=0.1)  # uniform: marginal 1/2
        meta = metaplayer.MetaArm(order=(1, 3))
        est = metaplayer.estimate_round_loss(
            state, meta, metaplayer.MetaFeedback(1, 0.5))
        assert est[1] == pytest.approx(2.0)
        assert np.count_nonzero(est) == 1

    def test_unobserved_arms_zero(self):
        state = metaplayer.fresh_state(5, 3, eta=0.2)
        meta = metaplayer.MetaArm(order=(4, 0, 2))
        est = metaplayer.estimate_round_loss(
            state, meta, metaplayer.MetaFeedback(4, 0.25))
        assert all(est[i] == 0.0 for i in range(5) if i != 4)

    def test_rejects_observation_outside_meta_arm(self):
        state = metaplayer.fresh_state(4, 2, eta=0.1)
        with pytest.raises(InvalidInputError):
            metaplayer.estimate_round_loss(
                state, metaplayer.MetaArm(order=(0, 1)),
                metaplayer.MetaFeedback(2, 0.5))

    def test_unbiased_and_observation_law(self):
        # E[estimate | weights] equals the true loss for every arm, and the
        # observed arm follows marginal/K
        eta = 0.3
        state = metaplayer.fresh_state(4, 2, eta=eta)
        state.cumulative[:] = [0.0, 1.0, 2.0, 0.5]
        rng = np.random.default_rng(25)
        losses = rng.uniform(0.1, 0.9, size=4)
        n = 100000
        sums = np.zeros(4)
        squares = np.zeros(4)
        observed_counts = np.zeros(4)
        for _ in range(n):
            meta = metaplayer.draw_meta_arm(state, rng)
            j = meta.order[0]
            observed_counts[j] += 1
            est = metaplayer.estimate_round_loss(
                state, meta, metaplayer.MetaFeedback(j, float(losses[j])))
            sums += est
            squares += est**2
        means = sums / n
        se = np.sqrt(np.maximum(squares / n - means**2, 0.0) / n)
        np.testing.assert_array_less(np.abs(means - losses), 3.0 * se)
        margs = kdpp.all_marginals(state.weights(), 2)
        freq_se = np.sqrt(margs / 2 * (1 - margs / 2) / n)
        np.testing.assert_array_less(
            np.abs(observed_counts / n - margs / 2), 3.0 * freq_se)

    def test_apply_accumulates_and_counts(self):
        state = metaplayer.fresh_state(3, 2, eta=0.1)
        metaplayer.apply_estimates(state, np.zeros(3))
        assert state.step == 1
        np.testing.assert_array_equal(state.cumulative, np.zeros(3))
        e = np.array([0.5, 0.0, 2.0])
        for _ in range(4):
            metaplayer.apply_estimates(state, e)
        np.testing.assert_allclose(state.cumulative, 4 * e)
        assert state.step == 5

    def test_apply_rejects_negative(self):
        state = metaplayer.fresh_state(3, 2, eta=0.1)
        with pytest.raises(InvalidInputError):
            metaplayer.apply_estimates(state, np.array([0.1, -0.1, 0.0]))


class TestIdealizedRun:
    def test_constant_equal_losses_zero_regret(self):
        losses = np.full((500, 4), 0.5)
        trace = metaplayer.run_idealized_metaplayer(
            4, 2, 500, 0.05, losses, np.random.default_rng(26), record_every=50)
        np.testing.assert_allclose(trace.regret, 0.0, atol=1e-9)

    def test_learns_the_good_arms(self):
        # two clearly better arms: late per-round regret rate near zero
        schedule = LossSchedule(kind="bernoulli", n_arms=4,
                                segments=((0, (0.1, 0.1, 0.9, 0.9)),), seed=5)
        horizon = 30000
        losses = schedule.materialize(horizon)
        trace = metaplayer.run_idealized_metaplayer(
            4, 2, horizon, metaplayer_eta(4, horizon), losses,
            np.random.default_rng(27), record_every=100)
        regret = trace.regret
        late_rate = (regret[-1] - regret[len(regret) // 2]) / (horizon / 2)
        early_rate = regret[len(regret) // 6] / (horizon / 6)
        assert late_rate < early_rate
        assert late_rate < 0.2

    def test_swap_sequence_stays_sublinear(self):
        # best pair changes mid-run; the square-root regret bound covers any
        # oblivious sequence, so finals must stay under it at every horizon
        # (here the learner tracks the swap and regrets even go negative,
        # which is sublinear a fortiori; a slope is only defined otherwise)
        grid = [4000, 8000, 16000, 32000]
        finals = []
        for horizon in grid:
            swap = horizon // 2
            schedule = LossSchedule(
                kind="piecewise-bernoulli", n_arms=4,
                segments=((0, (0.1, 0.2, 0.8, 0.9)), (swap, (0.9, 0.8, 0.2, 0.1))),
                seed=6)
            losses = schedule.materialize(horizon)
            runs = [metaplayer.run_idealized_metaplayer(
                        4, 2, horizon, metaplayer_eta(4, horizon), losses,
                        np.random.default_rng(1000 + horizon + r),
                        record_every=horizon).final_regret
                    for r in range(3)]
            finals.append(np.mean(runs))
        bounds = [2 * 2 * np.sqrt(h * 4 * np.log(4)) for h in grid]
        assert all(f <= b for f, b in zip(finals, bounds))
        if all(f > 0 for f in finals):
            slope = np.polyfit(np.log(grid), np.log(finals), 1)[0]
            assert slope < 1.0
        # tracking: post-swap charged rate approaches the new best pair's rate
        horizon = grid[-1]
        schedule = LossSchedule(
            kind="piecewise-bernoulli", n_arms=4,
            segments=((0, (0.1, 0.2, 0.8, 0.9)), (horizon // 2, (0.9, 0.8, 0.2, 0.1))),
            seed=6)
        trace = metaplayer.run_idealized_metaplayer(
            4, 2, horizon, metaplayer_eta(4, horizon),
            schedule.materialize(horizon), np.random.default_rng(28),
            record_every=horizon // 8)
        last_quarter_rate = ((trace.charged[-1] - trace.charged[-3])
                             / (trace.ts[-1] - trace.ts[-3]))
        assert last_quarter_rate < 1.3  # stuck on the old pair it would be 1.7
