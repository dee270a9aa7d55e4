"""Exponential weights over K-subsets with single-arm feedback.

A metaplayer picks K distinct arms per round, suffers all K losses, but
observes only one arm chosen uniformly from her set.  Subsets are sampled
with probability proportional to exp(-eta * sum of their cumulative loss
estimates); the observed loss feeds an importance-weighted estimator whose
vector has at most one nonzero entry:

    estimate_i = K * observed / Pr[i in subset]   (at the observed arm)

which is unbiased because the observed arm lands on i with probability
Pr[i in subset] / K.

The same state/update machinery serves the blocked coordinator, which calls
it once per block with the block-average loss instead of a per-round loss.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import kdpp
from .engine import RegretTrace, benchmark_best_k, record_points
from .errors import InvalidInputError, NumericalInstabilityError
from .seeding import shuffle_in_place


@dataclass(frozen=True)
class MetaArm:
    """K distinct arms with a playing order; position 0 is the arm the
    (meta)player observes, realizing the uniform pick."""

    order: tuple

    def __post_init__(self):
        if len(set(self.order)) != len(self.order) or not self.order:
            raise InvalidInputError(f"meta-arm order {self.order} must be distinct and nonempty")

    @property
    def members(self) -> frozenset:
        return frozenset(self.order)

    @property
    def k(self) -> int:
        return len(self.order)


class MetaFeedback(NamedTuple):
    observed_arm: int
    observed_value: float


@dataclass
class EstimatorState:
    """Cumulative importance-weighted loss estimates driving the weights."""

    cumulative: np.ndarray
    eta: float
    n_players: int
    step: int = 0

    @property
    def n_arms(self) -> int:
        return len(self.cumulative)

    def weights(self) -> np.ndarray:
        return kdpp.stabilize(self.cumulative, self.eta)


def fresh_state(n_arms: int, n_players: int, eta: float) -> EstimatorState:
    if not 1 <= n_players <= n_arms:
        raise InvalidInputError(f"need 1 <= K <= N, got K={n_players}, N={n_arms}")
    return EstimatorState(cumulative=np.zeros(n_arms), eta=eta, n_players=n_players)


def draw_meta_arm(state: EstimatorState, rng: np.random.Generator) -> MetaArm:
    """Sample members via the diagonal K-DPP, then order them by an
    independent uniform permutation (so position 0 is uniform over the set)."""
    w = state.weights()
    members = list(kdpp.sample_k_subset(w, state.n_players, rng))
    shuffle_in_place(rng, members)
    return MetaArm(order=tuple(members))


def estimate_round_loss(state: EstimatorState, meta: MetaArm,
                        feedback: MetaFeedback) -> np.ndarray:
    """Importance-weighted per-arm loss estimates: a single nonzero entry at
    the observed arm, K * value / marginal."""
    if feedback.observed_arm not in meta.members:
        raise InvalidInputError(
            f"observed arm {feedback.observed_arm} not in meta-arm {meta.order}")
    marginal = kdpp.marginal_inclusion(state.weights(), state.n_players,
                                       feedback.observed_arm)
    if marginal <= 0.0:
        raise NumericalInstabilityError(
            f"marginal of observed arm {feedback.observed_arm} is {marginal}")
    estimates = np.zeros(state.n_arms)
    estimates[feedback.observed_arm] = (
        state.n_players * feedback.observed_value / marginal)
    return estimates


def apply_estimates(state: EstimatorState, estimates) -> EstimatorState:
    """Accumulate one round (or block) of estimates; bumps the step counter."""
    estimates = np.asarray(estimates, dtype=np.float64)
    if estimates.shape != state.cumulative.shape:
        raise InvalidInputError("estimate vector length mismatch")
    if np.any(estimates < 0.0):
        raise InvalidInputError("loss estimates must be nonnegative")
    state.cumulative += estimates
    state.step += 1
    return state


def run_idealized_metaplayer(n_arms: int, n_players: int, horizon: int,
                             eta: float, losses, rng: np.random.Generator,
                             record_every: int = 100) -> RegretTrace:
    """Full-communication run: K distinct arms per round, no collisions, one
    uniformly observed arm.  Returns the regret trace against the anytime
    best K distinct arms.

    This is the pure-Python reference; `runner.run_idealized` dispatches to
    the compiled twin when available.
    """
    if hasattr(losses, "materialize"):
        losses = losses.materialize(horizon)
    losses = np.asarray(losses, dtype=np.float64)
    if losses.shape != (horizon, n_arms):
        raise InvalidInputError(f"loss table shape {losses.shape} mismatch")

    state = fresh_state(n_arms, n_players, eta)
    ts = record_points(horizon, record_every)
    charged_out = np.empty(len(ts))
    bench_out = np.empty(len(ts))
    cumulative_true = [0.0] * n_arms
    charged = 0.0
    rec = 0

    for t in range(horizon):
        row = losses[t]
        meta = draw_meta_arm(state, rng)
        observed = meta.order[0]
        for i in sorted(meta.order):
            charged += row[i]
        estimates = estimate_round_loss(
            state, meta, MetaFeedback(observed, float(row[observed])))
        apply_estimates(state, estimates)
        for i in range(n_arms):
            cumulative_true[i] += row[i]
        if t + 1 == ts[rec]:
            charged_out[rec] = charged
            bench_out[rec] = benchmark_best_k(cumulative_true, n_players)
            rec += 1

    return RegretTrace(ts=ts, charged=charged_out, benchmark=bench_out)
