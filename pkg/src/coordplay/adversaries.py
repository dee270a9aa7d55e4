"""Oblivious loss sequences: Bernoulli scenarios and file-driven tables.

A schedule fixes the full loss table before any player acts.  Bernoulli
kinds carry piecewise-constant per-arm mean losses plus a materialization
seed; each arm draws from its own seeded stream, so adding arms never
perturbs the draws of existing ones.  The three built-in scenarios:

  experiment 1: mean rewards uniform in [0, 1], redrawn until the gap
      between the K-th and (K+1)-th best is at least ``gap``; stationary.
  experiment 2: eight arms, mean losses (0.1 x4, 0.3 x4); arm 0 degrades to
      0.9 at floor(T/4) and arm 2 at floor(T/3) (two links failing).
  experiment 3: eight arms, mean losses (0.9, 0.7 x7); arm 0 improves to
      0.1 at floor(T/4) (a dead link coming up).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InvalidInputError, LossFileError

EXPERIMENT_ARMS = 8


@dataclass(frozen=True)
class LossSchedule:
    """Piecewise Bernoulli means or a verbatim loss table.

    ``segments`` holds (start_round, per-arm mean losses); starts ascend
    from 0.  ``seed`` feeds the per-arm sampling streams.  File schedules
    carry the parsed table directly and ignore the seed.
    """

    kind: str
    n_arms: int
    segments: tuple = ()
    seed: Optional[int] = None
    table: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.kind not in ("bernoulli", "piecewise-bernoulli", "file"):
            raise InvalidInputError(f"unknown schedule kind {self.kind!r}")
        if self.kind == "file":
            if self.table is None:
                raise InvalidInputError("file schedule needs a table")
            return
        if not self.segments or self.segments[0][0] != 0:
            raise InvalidInputError("segments must start at round 0")
        starts = [s for s, _ in self.segments]
        if starts != sorted(set(starts)):
            raise InvalidInputError("segment starts must strictly ascend")
        for start, means in self.segments:
            if len(means) != self.n_arms:
                raise InvalidInputError(
                    f"segment at {start} has {len(means)} means, expected {self.n_arms}")
            if any(not 0.0 <= m <= 1.0 for m in means):
                raise InvalidInputError(f"segment at {start} has means outside [0, 1]")
        if self.seed is None:
            raise InvalidInputError("bernoulli schedules need a materialization seed")

    def mean_losses_at(self, t: int) -> tuple:
        """Per-arm mean losses in force at (0-based) round t."""
        if self.kind == "file":
            return tuple(float(x) for x in self.table[t])
        current = self.segments[0][1]
        for start, means in self.segments:
            if start <= t:
                current = means
        return tuple(current)

    def materialize(self, horizon: int) -> np.ndarray:
        """The full (T, N) loss table; deterministic in (schedule, seed)."""
        if self.kind == "file":
            if horizon > self.table.shape[0]:
                raise InvalidInputError(
                    f"file provides {self.table.shape[0]} rounds, need {horizon}")
            return np.array(self.table[:horizon], dtype=np.float64)
        if any(start >= horizon for start, _ in self.segments[1:]):
            raise InvalidInputError("segment starts beyond the horizon")
        out = np.empty((horizon, self.n_arms), dtype=np.float64)
        bounds = [start for start, _ in self.segments] + [horizon]
        for arm in range(self.n_arms):
            rng = np.random.default_rng(np.random.SeedSequence([self.seed, arm]))
            for seg, (start, means) in enumerate(self.segments):
                length = bounds[seg + 1] - start
                out[start:start + length, arm] = (
                    rng.random(length) < means[arm]).astype(np.float64)
        return out


def experiment1_schedule(n_arms: int, n_players: int, gap: float,
                         rng: np.random.Generator, seed: int) -> LossSchedule:
    """Stationary Bernoulli arms with a reward gap at the top-K boundary.

    Mean rewards are uniform in [0, 1], redrawn until the sorted gap between
    the K-th and (K+1)-th best is at least ``gap``; losses are 1 - reward.
    """
    if not 0.0 <= gap < 1.0:
        raise InvalidInputError(f"gap must lie in [0, 1), got {gap}")
    if not 1 <= n_players < n_arms:
        raise InvalidInputError("need 1 <= K < N")
    while True:
        rewards = rng.random(n_arms)
        top = np.sort(rewards)[::-1]
        if top[n_players - 1] - top[n_players] >= gap:
            break
    means = tuple(float(1.0 - r) for r in rewards)
    return LossSchedule(kind="bernoulli", n_arms=n_arms,
                        segments=((0, means),), seed=seed)


def experiment2_schedule(horizon: int, seed: int) -> LossSchedule:
    """Two good links fail mid-run (mean loss jumps to 0.9)."""
    base = (0.1, 0.1, 0.1, 0.1, 0.3, 0.3, 0.3, 0.3)
    first = horizon // 4
    second = horizon // 3
    after_first = (0.9,) + base[1:]
    after_second = (0.9, 0.1, 0.9, 0.1, 0.3, 0.3, 0.3, 0.3)
    return LossSchedule(kind="piecewise-bernoulli", n_arms=EXPERIMENT_ARMS,
                        segments=((0, base), (first, after_first),
                                  (second, after_second)),
                        seed=seed)


def experiment3_schedule(horizon: int, seed: int) -> LossSchedule:
    """A bad link improves mid-run (mean loss drops from 0.9 to 0.1)."""
    base = (0.9,) + (0.7,) * 7
    improved = (0.1,) + (0.7,) * 7
    return LossSchedule(kind="piecewise-bernoulli", n_arms=EXPERIMENT_ARMS,
                        segments=((0, base), (horizon // 4, improved)),
                        seed=seed)


def load_schedule_file(path) -> LossSchedule:
    """Parse a comma-separated loss table: one round per line, N values in
    [0, 1], no header.  Errors carry the 1-based line number."""
    rows = []
    n_cols = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            fields = line.split(",")
            if n_cols is None:
                n_cols = len(fields)
            elif len(fields) != n_cols:
                raise LossFileError(
                    f"expected {n_cols} fields, found {len(fields)}", line=lineno)
            try:
                values = [float(f) for f in fields]
            except ValueError:
                raise LossFileError(f"unparsable value in {line!r}", line=lineno)
            for v in values:
                if not 0.0 <= v <= 1.0:
                    raise LossFileError(f"loss {v} outside [0, 1]", line=lineno)
            rows.append(values)
    if not rows:
        raise LossFileError("file contains no loss rows")
    return LossSchedule(kind="file", n_arms=n_cols,
                        table=np.asarray(rows, dtype=np.float64))
