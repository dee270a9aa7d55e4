"""Simultaneous-play game loop: collisions, loss charging, regret accounting.

Players are state machines with ``act(t) -> action`` and
``observe(t, outcome)``.  Actions are 0-based arm indices, or QUIET (-1) to
abstain.  Per round every player is charged: the arm's loss if she was the
sole picker, 1 on a collision, 1 for staying quiet.  A colliding player
learns only that she collided; a quiet player causes no collisions.

The regret benchmark is the anytime best-K: at each recorded t, the sum of
the K smallest cumulative true arm losses over [1, t].
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .errors import InvalidInputError

QUIET = -1

OBSERVED = 0
COLLISION = 1
QUIET_CHARGED = 2


class RoundOutcome(NamedTuple):
    """What one player learns from one round."""

    kind: int
    loss: float

    @property
    def collided(self) -> bool:
        return self.kind == COLLISION


COLLISION_OUTCOME = RoundOutcome(COLLISION, 1.0)
QUIET_OUTCOME = RoundOutcome(QUIET_CHARGED, 1.0)


def default_tau(n_arms: int, n_players: int, horizon: int) -> int:
    """Block length (K^2*N*T / ln N)^(1/3), clamped so the Play phase is
    nonempty."""
    raw = (n_players**2 * n_arms * horizon / math.log(n_arms)) ** (1.0 / 3.0)
    return max(round(raw), (n_players - 1) * n_arms + 1)


def default_eta(n_arms: int, horizon: int, tau: int) -> float:
    """Blocked exponential-weights rate sqrt(ln N / ((T/tau) * N))."""
    return math.sqrt(math.log(n_arms) / ((horizon / tau) * n_arms))


def default_rank_rounds(n_players: int, horizon: int) -> int:
    """ceil(K * e * ln T): enough for ranking to succeed w.p. >= 1 - K/T."""
    return math.ceil(n_players * math.e * math.log(horizon))


def idealized_eta(n_arms: int, horizon: int) -> float:
    """Per-round (unblocked) rate sqrt(ln N / (T * N))."""
    return math.sqrt(math.log(n_arms) / (horizon * n_arms))


@dataclass(frozen=True)
class GameConfig:
    """All parameters of one run.  ``from_horizon`` fills the protocol
    parameters with their theoretical defaults."""

    n_arms: int
    n_players: int
    horizon: int
    tau: int
    eta: float
    rank_rounds: int
    seed: int = 0
    record_every: int = 100

    def __post_init__(self):
        if not self.n_players < self.n_arms:
            raise InvalidInputError(
                f"need K < N, got K={self.n_players}, N={self.n_arms}")
        if not self.n_arms < self.horizon:
            raise InvalidInputError(
                f"need N < T, got N={self.n_arms}, T={self.horizon}")
        if self.tau <= (self.n_players - 1) * self.n_arms:
            raise InvalidInputError(
                f"block length {self.tau} leaves no Play phase "
                f"(needs > {(self.n_players - 1) * self.n_arms})")
        if not (self.eta > 0.0 and math.isfinite(self.eta)):
            raise InvalidInputError(f"eta must be positive, got {self.eta}")
        if not 1 <= self.rank_rounds < self.horizon:
            raise InvalidInputError(
                f"rank_rounds {self.rank_rounds} must lie in [1, T)")
        if self.record_every < 1:
            raise InvalidInputError("record_every must be >= 1")

    @classmethod
    def from_horizon(cls, n_arms, n_players, horizon, seed=0, tau=None,
                     eta=None, rank_rounds=None, record_every=100):
        if tau is None:
            tau = default_tau(n_arms, n_players, horizon)
        if eta is None:
            eta = default_eta(n_arms, horizon, tau)
        if rank_rounds is None:
            rank_rounds = default_rank_rounds(n_players, horizon)
        return cls(n_arms=n_arms, n_players=n_players, horizon=horizon,
                   tau=tau, eta=eta, rank_rounds=rank_rounds, seed=seed,
                   record_every=record_every)


@dataclass
class RegretTrace:
    """Time-indexed cumulative charged loss vs. anytime best-K benchmark."""

    ts: np.ndarray
    charged: np.ndarray
    benchmark: np.ndarray
    collisions: int = 0
    quiet_rounds: int = 0
    play_collisions: int = 0

    @property
    def regret(self) -> np.ndarray:
        return self.charged - self.benchmark

    @property
    def final_regret(self) -> float:
        return float(self.charged[-1] - self.benchmark[-1])

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write("t,charged_loss,benchmark_loss,online_regret\n")
            for t, c, b in zip(self.ts, self.charged, self.benchmark):
                c, b = float(c), float(b)
                fh.write(f"{int(t)},{c!r},{b!r},{c - b!r}\n")


def resolve_round(actions: Sequence[int], losses) -> list:
    """Outcomes of one simultaneous round.

    ``actions`` holds one entry per player (arm index or QUIET); ``losses``
    the true per-arm losses of the round, each in [0, 1].
    """
    n = len(losses)
    counts = [0] * n
    for a in actions:
        if a == QUIET:
            continue
        if not 0 <= a < n:
            raise InvalidInputError(f"arm index {a} outside [0, {n})")
        counts[a] += 1
    outcomes = []
    for a in actions:
        if a == QUIET:
            outcomes.append(QUIET_OUTCOME)
        elif counts[a] >= 2:
            outcomes.append(COLLISION_OUTCOME)
        else:
            outcomes.append(RoundOutcome(OBSERVED, float(losses[a])))
    return outcomes


def benchmark_best_k(cumulative_losses, k: int) -> float:
    """Sum of the k smallest entries (distinctness makes the combinatorial
    minimum separable).  Summation runs in ascending order."""
    smallest = sorted(float(x) for x in cumulative_losses)[:k]
    total = 0.0
    for v in smallest:
        total += v
    return total


def record_points(horizon: int, record_every: int) -> np.ndarray:
    ts = list(range(record_every, horizon + 1, record_every))
    if not ts or ts[-1] != horizon:
        ts.append(horizon)
    return np.asarray(ts, dtype=np.int64)


def run_game(players, losses, config: GameConfig,
             play_round_flags: Optional[Sequence[bool]] = None) -> RegretTrace:
    """Drive K player state machines against a materialized loss table.

    ``losses`` is a (T, N) array fixed before play (oblivious adversary), or
    a schedule exposing ``materialize``.  Records the trace every
    ``config.record_every`` rounds and at t = T.  ``play_round_flags``, when
    given, marks rounds whose collisions count as Play-phase collisions.
    """
    if hasattr(losses, "materialize"):
        losses = losses.materialize(config.horizon)
    losses = np.asarray(losses, dtype=np.float64)
    horizon, n = losses.shape
    if horizon != config.horizon or n != config.n_arms:
        raise InvalidInputError(
            f"loss table shape {losses.shape} does not match config "
            f"(T={config.horizon}, N={config.n_arms})")
    if len(players) != config.n_players:
        raise InvalidInputError(
            f"expected {config.n_players} players, got {len(players)}")

    ts = record_points(horizon, config.record_every)
    charged_out = np.empty(len(ts), dtype=np.float64)
    bench_out = np.empty(len(ts), dtype=np.float64)

    cumulative_true = [0.0] * n
    charged = 0.0
    n_collisions = 0
    n_quiet = 0
    n_play_collisions = 0
    rec = 0

    for t in range(horizon):
        row = losses[t]
        actions = [p.act(t) for p in players]
        outcomes = resolve_round(actions, row)
        for p, outcome in zip(players, outcomes):
            charged += outcome.loss
            if outcome.kind == COLLISION:
                n_collisions += 1
                if play_round_flags is not None and play_round_flags[t]:
                    n_play_collisions += 1
            elif outcome.kind == QUIET_CHARGED:
                n_quiet += 1
            p.observe(t, outcome)
        for i in range(n):
            cumulative_true[i] += row[i]
        if t + 1 == ts[rec]:
            charged_out[rec] = charged
            bench_out[rec] = benchmark_best_k(cumulative_true, config.n_players)
            rec += 1

    return RegretTrace(ts=ts, charged=charged_out, benchmark=bench_out,
                       collisions=n_collisions, quiet_rounds=n_quiet,
                       play_collisions=n_play_collisions)
