"""Baseline behavior: learning, ownership, reaction (or lack of it)."""

import numpy as np
import pytest

from coordplay import runner
from coordplay.engine import (COLLISION_OUTCOME, OBSERVED, GameConfig,
                              RoundOutcome, resolve_round, run_game)
from coordplay.musical_chairs import MusicalChairsPlayer


def make_player(n_arms=4, n_players=2, learn_rounds=10, seed=70):
    return MusicalChairsPlayer(n_arms, n_players, learn_rounds,
                               np.random.default_rng(seed))


class TestPhases:
    def test_learning_picks_are_uniform(self):
        p = make_player(n_arms=6, learn_rounds=6000)
        picks = np.array([p.act(t) for t in range(6000)])
        freqs = np.bincount(picks, minlength=6) / 6000
        np.testing.assert_allclose(freqs, 1 / 6, atol=0.03)

    def test_collision_does_not_update_estimates(self):
        p = make_player()
        p.act(0)
        p.observe(0, COLLISION_OUTCOME)
        assert p.counts == [0, 0, 0, 0]

    def test_observation_updates_reward_estimate(self):
        p = make_player()
        arm = p.act(0)
        p.observe(0, RoundOutcome(OBSERVED, 0.25))
        assert p.counts[arm] == 1
        assert p.reward_sums[arm] == pytest.approx(0.75)

    def test_never_observed_arm_estimates_zero_and_is_excluded(self):
        p = make_player(n_arms=4, n_players=2, learn_rounds=3)
        seen = []
        for t in range(3):
            arm = p.act(t)
            seen.append(arm)
            p.observe(t, RoundOutcome(OBSERVED, 0.1))  # reward 0.9
        means = p.estimated_means()
        unseen = [i for i in range(4) if i not in seen]
        for arm in unseen:
            assert means[arm] == 0.0
        p.act(3)
        assert all(means[a] > 0.0 for a in p.top_k[:len(set(seen))])

    def test_top_k_ties_break_low_index(self):
        p = make_player(n_arms=5, n_players=3, learn_rounds=1)
        p.act(0)
        p.observe(0, COLLISION_OUTCOME)  # all estimates stay 0
        p.act(1)
        assert p.top_k == [0, 1, 2]

    def test_first_non_collision_owns_forever(self):
        p = make_player(learn_rounds=2)
        for t in range(2):
            p.act(t)
            p.observe(t, COLLISION_OUTCOME)
        a = p.act(2)
        p.observe(2, COLLISION_OUTCOME)
        assert p.owned is None
        b = p.act(3)
        p.observe(3, RoundOutcome(OBSERVED, 0.5))
        assert p.owned == b
        assert all(p.act(t) == b for t in range(4, 30))

    def test_single_player_owns_best_estimate_at_once(self):
        p = make_player(n_arms=3, n_players=1, learn_rounds=50, seed=71)
        losses = np.array([0.9, 0.1, 0.5])
        for t in range(50):
            arm = p.act(t)
            p.observe(t, RoundOutcome(OBSERVED, float(losses[arm])))
        a = p.act(50)
        assert a == 1  # lowest loss = highest reward
        p.observe(50, RoundOutcome(OBSERVED, 0.1))
        assert p.owned == 1


class TestFullRuns:
    def test_flat_after_ownership_on_stationary_losses(self):
        horizon, learn = 30000, 3000
        sched = runner.build_schedule("exp1", 8, 4, horizon, 0.05, 72, 0)
        losses = sched.materialize(horizon)
        trace = runner.run_mc(8, 4, horizon, learn, losses, 72, 0)
        regret = trace.regret
        ts = list(trace.ts)
        i0 = ts.index(2 * learn)
        half = len(ts) // 2
        late_growth = regret[-1] - regret[half]
        assert abs(late_growth) < 0.05 * max(regret[half], 1.0)
        # ownership reached near the learning phase's end
        assert regret[i0] == pytest.approx(regret[-1], rel=0.25)

    def test_all_players_own_distinct_arms(self):
        horizon = 8000
        sched = runner.build_schedule("exp1", 8, 4, horizon, 0.05, 73, 1)
        losses = sched.materialize(horizon)
        players = [MusicalChairsPlayer(8, 4, 3000, np.random.default_rng([73, i]))
                   for i in range(4)]
        config = GameConfig(n_arms=8, n_players=4, horizon=horizon, tau=25,
                            eta=1.0, rank_rounds=1, record_every=1000)
        run_game(players, losses, config)
        owned = [p.owned for p in players]
        assert None not in owned
        assert len(set(owned)) == 4
