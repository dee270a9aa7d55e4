"""Musical Chairs baseline.

Players estimate mean rewards by uniform exploration for a fixed learning
phase, then repeatedly pick a uniform arm among their own estimated top K
until the first collision-free round makes them the owner of that arm; an
owner never moves again.  Designed for stationary rewards: constant regret
once everyone owns an arm, but no ability to react to later changes.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from .engine import COLLISION, OBSERVED, RoundOutcome
from .errors import InvalidInputError
from .seeding import rand_below


class MusicalChairsPlayer:
    """One baseline player.  Rewards are 1 - loss; estimates freeze when the
    learning phase ends, and arms never observed estimate to reward 0."""

    def __init__(self, n_arms: int, n_players: int, learn_rounds: int,
                 rng: np.random.Generator):
        if not 1 <= n_players <= n_arms:
            raise InvalidInputError(f"need 1 <= K <= N, got K={n_players}, N={n_arms}")
        if learn_rounds < 1:
            raise InvalidInputError("learn_rounds must be >= 1")
        self.n_arms = n_arms
        self.n_players = n_players
        self.learn_rounds = learn_rounds
        self.rng = rng
        self.reward_sums = [0.0] * n_arms
        self.counts = [0] * n_arms
        self.top_k: Optional[list] = None
        self.owned: Optional[int] = None
        self._last_action = -1

    def estimated_means(self) -> list:
        return [self.reward_sums[i] / self.counts[i] if self.counts[i] else 0.0
                for i in range(self.n_arms)]

    def _freeze_estimates(self) -> None:
        means = self.estimated_means()
        ranked = sorted(range(self.n_arms), key=lambda i: (-means[i], i))
        self.top_k = ranked[:self.n_players]

    def act(self, t: int) -> int:
        if t < self.learn_rounds:
            self._last_action = rand_below(self.rng, self.n_arms)
            return self._last_action
        if self.owned is not None:
            return self.owned
        if self.top_k is None:
            self._freeze_estimates()
        self._last_action = self.top_k[rand_below(self.rng, self.n_players)]
        return self._last_action

    def observe(self, t: int, outcome: RoundOutcome) -> None:
        if t < self.learn_rounds:
            if outcome.kind == OBSERVED:
                self.reward_sums[self._last_action] += 1.0 - outcome.loss
                self.counts[self._last_action] += 1
            return
        if self.owned is None and outcome.kind != COLLISION:
            self.owned = self._last_action
