"""Single-run entry points, dispatching to the compiled core when present.

Every function takes a materialized loss table plus per-player bit
generators and returns a RegretTrace.  The compiled and pure paths consume
identical random streams in an identical order, so for a given seed the
traces are bit-for-bit equal regardless of backend (the equivalence tests
and the benchmark both rely on this).
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from . import _backend, adversaries, seeding
from .engine import GameConfig, RegretTrace, run_game
from .errors import InvalidInputError
from .metaplayer import run_idealized_metaplayer
from .musical_chairs import MusicalChairsPlayer
from .protocol import CpPlayer, play_round_flags

ALGORITHMS = ("cp", "cp-quietfree", "mc", "idealized")


def build_schedule(scenario: str, n_arms: int, n_players: int, horizon: int,
                   gap: float, base_seed: int, run_index: int,
                   loss_file: Optional[str] = None) -> adversaries.LossSchedule:
    """The run's oblivious adversary, derived only from (base_seed, run)."""
    mat_seed = seeding.materialize_seed(base_seed, run_index)
    if scenario == "exp1":
        return adversaries.experiment1_schedule(
            n_arms, n_players, gap, seeding.instance_rng(base_seed, run_index),
            mat_seed)
    if scenario == "exp2":
        return adversaries.experiment2_schedule(horizon, mat_seed)
    if scenario == "exp3":
        return adversaries.experiment3_schedule(horizon, mat_seed)
    if scenario == "file":
        if loss_file is None:
            raise InvalidInputError("scenario 'file' needs a loss file path")
        return adversaries.load_schedule_file(loss_file)
    raise InvalidInputError(f"unknown scenario {scenario!r}")


def _traces_from_core(arrays) -> RegretTrace:
    ts, charged, bench, collisions, quiet, play_collisions = arrays
    return RegretTrace(ts=ts, charged=charged, benchmark=bench,
                       collisions=int(collisions), quiet_rounds=int(quiet),
                       play_collisions=int(play_collisions))


def run_cp(config: GameConfig, losses: np.ndarray, base_seed: int,
           run_index: int, quiet_free: bool = False,
           backend: Optional[str] = None) -> RegretTrace:
    """One full protocol run (ranking + blocks + trailing rounds)."""
    losses = np.ascontiguousarray(losses, dtype=np.float64)
    core = _backend.resolve(backend)
    bitgens = [seeding.player_bit_generator(base_seed, run_index, k)
               for k in range(config.n_players)]
    if core is not None:
        return _traces_from_core(core.run_cp(
            losses, config.n_players, config.tau, config.eta,
            config.rank_rounds, 1 if quiet_free else 0, config.record_every,
            bitgens))
    players = [CpPlayer(config, np.random.Generator(bg), quiet_free=quiet_free)
               for bg in bitgens]
    return run_game(players, losses, config,
                    play_round_flags=play_round_flags(config))


def run_mc(n_arms: int, n_players: int, horizon: int, learn_rounds: int,
           losses: np.ndarray, base_seed: int, run_index: int,
           record_every: int = 100, backend: Optional[str] = None) -> RegretTrace:
    """One baseline run."""
    losses = np.ascontiguousarray(losses, dtype=np.float64)
    core = _backend.resolve(backend)
    bitgens = [seeding.player_bit_generator(base_seed, run_index, k)
               for k in range(n_players)]
    if core is not None:
        return _traces_from_core(core.run_mc(
            losses, n_players, learn_rounds, record_every, bitgens))
    players = [MusicalChairsPlayer(n_arms, n_players, learn_rounds,
                                   np.random.Generator(bg)) for bg in bitgens]
    # protocol fields are unused by the baseline; any valid placeholders do
    config = GameConfig(n_arms=n_arms, n_players=n_players, horizon=horizon,
                        tau=(n_players - 1) * n_arms + 1, eta=1.0,
                        rank_rounds=1, record_every=record_every)
    return run_game(players, losses, config)


def ranking_success_rate(n_players: int, rank_rounds: int, n_trials: int,
                         seed: int, backend: Optional[str] = None) -> float:
    """Fraction of independent trials in which every player locks a rank
    within ``rank_rounds`` rounds of the musical-chairs ranking game."""
    bitgen = np.random.PCG64(np.random.SeedSequence([seed, 3]))
    core = _backend.resolve(backend)
    if core is not None:
        return core.ranking_trials(n_players, rank_rounds, n_trials, bitgen) / n_trials
    rng = np.random.Generator(bitgen)
    successes = 0
    for _ in range(n_trials):
        ranks = [0] * n_players
        n_ranked = 0
        t = 0
        while t < rank_rounds and n_ranked < n_players:
            picks = [ranks[kk] - 1 if ranks[kk] > 0 else
                     seeding.rand_below(rng, n_players)
                     for kk in range(n_players)]
            counts = [0] * n_players
            for p in picks:
                counts[p] += 1
            for kk in range(n_players):
                if ranks[kk] == 0 and counts[picks[kk]] == 1:
                    ranks[kk] = picks[kk] + 1
                    n_ranked += 1
            t += 1
        if n_ranked == n_players:
            successes += 1
    return successes / n_trials


def run_idealized(n_arms: int, n_players: int, horizon: int, eta: float,
                  losses: np.ndarray, base_seed: int, run_index: int,
                  record_every: int = 100,
                  backend: Optional[str] = None) -> RegretTrace:
    """One idealized (full-communication) metaplayer run."""
    losses = np.ascontiguousarray(losses, dtype=np.float64)
    core = _backend.resolve(backend)
    bitgen = seeding.player_bit_generator(base_seed, run_index, 0)
    if core is not None:
        ts, charged, bench = core.run_idealized(
            losses, n_players, eta, record_every, bitgen)
        return RegretTrace(ts=ts, charged=charged, benchmark=bench)
    return run_idealized_metaplayer(n_arms, n_players, horizon, eta, losses,
                                    np.random.Generator(bitgen),
                                    record_every=record_every)
