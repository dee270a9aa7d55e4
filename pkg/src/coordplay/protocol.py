"""Player state machines for the no-communication game.

A run has three phases.  Ranking: everyone plays musical chairs on the
first K arms until she owns one; the owned arm index is her rank.  Blocks:
rank 1 becomes the coordinator, draws K arms per block from the
exponential-weights distribution, and assigns one to each follower through
deliberate collisions during the Coordinate phase; everyone then sits on
her arm for the Play phase.  Trailing rounds that do not fill a block are
played uniformly at random.

The Coordinate phase splits into K-1 sub-blocks of N rounds.  In sub-block
r the coordinator parks on the arm meant for follower r; follower r sweeps
arms 0, 1, ... until she collides, which tells her the arm.  Remaining
followers stay quiet, or, in the quiet-free variant, park on arm 0 and the
sweeping follower ignores collisions there (a full sweep with collisions
only on arm 0 means arm 0 is hers).  In that variant the coordinator keeps
her park position for the whole sub-block whenever the assigned arm IS arm
0, because collisions on arm 0 no longer single out the explorer.

No player ever communicates: all information flows through collision
events produced by the engine.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import metaplayer
from .engine import COLLISION, OBSERVED, QUIET, GameConfig, RoundOutcome
from .errors import InvalidInputError, ProtocolViolationError
from .seeding import rand_below


@dataclass(frozen=True)
class BlockSchedule:
    """Round layout inside one block of tau rounds."""

    n_arms: int
    n_players: int
    tau: int

    def __post_init__(self):
        if self.tau <= self.coordinate_len:
            raise InvalidInputError(
                f"tau={self.tau} leaves no Play phase (coordinate needs "
                f"{self.coordinate_len} rounds)")

    @property
    def coordinate_len(self) -> int:
        return (self.n_players - 1) * self.n_arms

    @property
    def play_len(self) -> int:
        return self.tau - self.coordinate_len

    def sub_block(self, round_in_block: int) -> Optional[int]:
        """Sub-block rank r in [2, K] for Coordinate rounds, None for Play."""
        if round_in_block < self.coordinate_len:
            return 2 + round_in_block // self.n_arms
        return None

    def sub_block_start(self, rank: int) -> int:
        return (rank - 2) * self.n_arms


class RankingProcedure:
    """Musical chairs on the first K arms: pick uniformly until the first
    collision-free round, then hold that arm; its index + 1 is the rank."""

    def __init__(self, n_players: int):
        self.n_players = n_players
        self.rank: Optional[int] = None
        self._last_pick = -1

    def act(self, rng: np.random.Generator) -> int:
        if self.rank is not None:
            return self.rank - 1
        self._last_pick = rand_below(rng, self.n_players)
        return self._last_pick

    def observe(self, outcome: RoundOutcome) -> None:
        if self.rank is None and outcome.kind != COLLISION:
            self.rank = self._last_pick + 1


class Coordinator:
    """Blocked metaplayer driving assignments through collisions (rank 1).

    Per block: draw an ordered meta-arm, park on the r-th arm during
    sub-block r until the explorer's collision arrives, sit on her own arm
    (position 0) otherwise, and at the end of the block feed the average
    observed loss of her own arm back into the estimator.
    """

    def __init__(self, schedule: BlockSchedule, eta: float,
                 rng: np.random.Generator, quiet_free: bool = False,
                 draw_fn: Optional[Callable] = None):
        self.schedule = schedule
        self.rng = rng
        self.quiet_free = quiet_free
        self._draw_fn = draw_fn or metaplayer.draw_meta_arm
        self.estimator = metaplayer.fresh_state(
            schedule.n_arms, schedule.n_players, eta)
        self.meta: Optional[metaplayer.MetaArm] = None
        self._collided_sub = -1
        self._acc = [0.0] * schedule.n_arms
        self._last_action = -1

    def start_block(self) -> None:
        self.meta = self._draw_fn(self.estimator, self.rng)
        self._collided_sub = -1
        for i in range(self.schedule.n_arms):
            self._acc[i] = 0.0

    def act(self, round_in_block: int) -> int:
        order = self.meta.order
        r = self.schedule.sub_block(round_in_block)
        if r is None:
            arm = order[0]
        else:
            target = order[r - 1]
            if self.quiet_free and target == 0:
                # collisions on arm 0 are ambiguous; hold position all sub-block
                arm = target
            elif self._collided_sub == r:
                arm = order[0]
            else:
                arm = target
        self._last_action = arm
        return arm

    def observe(self, round_in_block: int, outcome: RoundOutcome) -> None:
        if outcome.kind == COLLISION:
            r = self.schedule.sub_block(round_in_block)
            if r is not None:
                self._collided_sub = r
        elif outcome.kind == OBSERVED:
            self._acc[self._last_action] += outcome.loss

    def end_block(self) -> None:
        """Blocked estimator update: only the coordinator's own arm (position
        0) receives an estimate, K * (average observed loss) / marginal."""
        own = self.meta.order[0]
        feedback = metaplayer.MetaFeedback(own, self._acc[own] / self.schedule.tau)
        estimates = metaplayer.estimate_round_loss(self.estimator, self.meta, feedback)
        metaplayer.apply_estimates(self.estimator, estimates)


class Follower:
    """Accepts whatever arm the coordinator assigns (ranks 2..K).

    Quiet variant: quiet outside her own sub-block, sweep until the first
    collision inside it.  Quiet-free variant: park on arm 0 instead of
    staying quiet; during her sweep only collisions off arm 0 identify the
    assignment, and a sweep with collisions only on arm 0 locks arm 0.

    Followers ignore loss feedback entirely.  With ``strict`` a sweep that
    ends without any usable collision raises; otherwise the follower plays
    uniformly at random for the block's Play phase and retries next block
    (only reachable when ranking failed and no proper coordinator exists).
    """

    def __init__(self, schedule: BlockSchedule, rank: int,
                 rng: np.random.Generator, quiet_free: bool = False,
                 strict: bool = False):
        if not 2 <= rank <= schedule.n_players:
            raise InvalidInputError(f"follower rank {rank} outside [2, K]")
        self.schedule = schedule
        self.rank = rank
        self.rng = rng
        self.quiet_free = quiet_free
        self.strict = strict
        self.locked: Optional[int] = None
        self._saw_own_park_collision = False
        self._last_action = QUIET

    def start_block(self) -> None:
        self.locked = None
        self._saw_own_park_collision = False

    def act(self, round_in_block: int) -> int:
        r = self.schedule.sub_block(round_in_block)
        if r is None:
            if self.locked is None:
                return rand_below(self.rng, self.schedule.n_arms)
            return self.locked
        if r == self.rank:
            if self.locked is not None:
                arm = self.locked
            else:
                arm = round_in_block - self.schedule.sub_block_start(self.rank)
            self._last_action = arm
            return arm
        return 0 if self.quiet_free else QUIET

    def observe(self, round_in_block: int, outcome: RoundOutcome) -> None:
        if self.schedule.sub_block(round_in_block) != self.rank:
            return
        local = round_in_block - self.schedule.sub_block_start(self.rank)
        if self.locked is None and outcome.kind == COLLISION:
            if self.quiet_free and self._last_action == 0:
                self._saw_own_park_collision = True
            else:
                self.locked = self._last_action
        if self.locked is None and local == self.schedule.n_arms - 1:
            if self.quiet_free and self._saw_own_park_collision:
                self.locked = 0
            elif self.strict:
                raise ProtocolViolationError(
                    f"follower {self.rank} finished her sweep without a "
                    f"usable collision")

    def end_block(self) -> None:
        pass


class _UniformRole:
    """Fallback for a player who never obtained a rank: uniform forever."""

    def __init__(self, n_arms: int, rng: np.random.Generator):
        self.n_arms = n_arms
        self.rng = rng

    def start_block(self) -> None:
        pass

    def act(self, round_in_block: int) -> int:
        return rand_below(self.rng, self.n_arms)

    def observe(self, round_in_block: int, outcome: RoundOutcome) -> None:
        pass

    def end_block(self) -> None:
        pass


class CpPlayer:
    """One player of the full protocol: ranking, then her block-phase role,
    then uniform play on the trailing rounds."""

    def __init__(self, config: GameConfig, rng: np.random.Generator,
                 quiet_free: bool = False, strict: bool = False,
                 draw_fn: Optional[Callable] = None):
        self.config = config
        self.rng = rng
        self.quiet_free = quiet_free
        self.strict = strict
        self._draw_fn = draw_fn
        self.ranking = RankingProcedure(config.n_players)
        self.role = None
        span = config.horizon - config.rank_rounds
        self.n_blocks = span // config.tau
        self.blocks_end = config.rank_rounds + self.n_blocks * config.tau

    def _assume_role(self) -> None:
        schedule = BlockSchedule(self.config.n_arms, self.config.n_players,
                                 self.config.tau)
        rank = self.ranking.rank
        if rank is None:
            self.role = _UniformRole(self.config.n_arms, self.rng)
        elif rank == 1:
            self.role = Coordinator(schedule, self.config.eta, self.rng,
                                    quiet_free=self.quiet_free,
                                    draw_fn=self._draw_fn)
        else:
            self.role = Follower(schedule, rank, self.rng,
                                 quiet_free=self.quiet_free, strict=self.strict)

    def act(self, t: int) -> int:
        if t < self.config.rank_rounds:
            return self.ranking.act(self.rng)
        if t >= self.blocks_end:
            return rand_below(self.rng, self.config.n_arms)
        if self.role is None:
            self._assume_role()
        rib = (t - self.config.rank_rounds) % self.config.tau
        if rib == 0:
            self.role.start_block()
        return self.role.act(rib)

    def observe(self, t: int, outcome: RoundOutcome) -> None:
        if t < self.config.rank_rounds:
            self.ranking.observe(outcome)
            return
        if t >= self.blocks_end:
            return
        rib = (t - self.config.rank_rounds) % self.config.tau
        self.role.observe(rib, outcome)
        if rib == self.config.tau - 1:
            self.role.end_block()

    @property
    def rank(self) -> Optional[int]:
        return self.ranking.rank


def play_round_flags(config: GameConfig) -> list:
    """True for rounds inside some block's Play phase (collision audits)."""
    flags = [False] * config.horizon
    span = config.horizon - config.rank_rounds
    n_blocks = span // config.tau
    coordinate_len = (config.n_players - 1) * config.n_arms
    for b in range(n_blocks):
        start = config.rank_rounds + b * config.tau
        for rib in range(coordinate_len, config.tau):
            flags[start + rib] = True
    return flags
