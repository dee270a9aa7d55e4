"""Random-stream plumbing.

Every stochastic decision in the simulator is derived from `Generator.random()`
calls on a per-entity PCG64 stream (one stream per player, one per arm for loss
materialization, one for instance generation).  Integer draws and shuffles are
built from single uniform draws below so that the compiled backend, which pulls
raw doubles from the same bit generators, reproduces the exact draw sequence.
"""

from __future__ import annotations

import numpy as np


def rand_below(rng: np.random.Generator, n: int) -> int:
    """One uniform integer in [0, n) consuming exactly one double draw."""
    i = int(rng.random() * n)
    # u < 1 can still round up to n for tiny n after the multiply
    return n - 1 if i >= n else i


def shuffle_in_place(rng: np.random.Generator, items: list) -> None:
    """Fisher-Yates shuffle consuming len(items) - 1 draws (descending scan)."""
    for j in range(len(items) - 1, 0, -1):
        r = rand_below(rng, j + 1)
        items[j], items[r] = items[r], items[j]


def instance_rng(base_seed: int, run_index: int) -> np.random.Generator:
    """Stream for per-run instance generation (e.g. drawing mean rewards)."""
    return np.random.default_rng(np.random.SeedSequence([base_seed, run_index, 0]))


def materialize_seed(base_seed: int, run_index: int) -> int:
    """Root seed for the run's loss-table materialization (split per arm later)."""
    ss = np.random.SeedSequence([base_seed, run_index, 1])
    return int(ss.generate_state(1, np.uint64)[0])


def player_bit_generator(base_seed: int, run_index: int, player: int) -> np.random.PCG64:
    """The player's own bit generator; players never share streams, so the
    engine's evaluation order cannot perturb anyone's draws."""
    return np.random.PCG64(np.random.SeedSequence([base_seed, run_index, 2, player]))


def player_rng(base_seed: int, run_index: int, player: int) -> np.random.Generator:
    return np.random.Generator(player_bit_generator(base_seed, run_index, player))
