"""Exact sampling and marginals for product-weighted K-subsets.

The coordinator's exponential-weights distribution over size-K subsets of
[N] assigns Pr[I] proportional to prod_{i in I} w_i, i.e. a determinantal
point process with a diagonal kernel.  Everything reduces to elementary
symmetric polynomials (ESPs) of the weight vector:

    e_k(w_1..w_n) = sum over |I|=k subsets of prod_{i in I} w_i

The normalizer of the K-subset distribution is e_K(w), the marginal of arm
i is w_i * e_{K-1}(w with i removed) / e_K(w), and an exact sample falls
out of a single backward scan over the ESP table.  All three cost O(NK).

Weights are produced by `stabilize`, which shifts cumulative loss estimates
by their minimum before exponentiating; the shift cancels in every subset
probability, and keeps the largest weight at exactly 1 so nothing overflows
over long horizons.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, NumericalInstabilityError
from .seeding import rand_below

# Conditional inclusion probabilities may exceed 1 by rounding noise; anything
# beyond this is treated as a real numerical failure.
PROB_TOLERANCE = 1e-9


@dataclass(frozen=True)
class EspTable:
    """Grid of elementary symmetric polynomials of weight prefixes.

    ``table[n, k]`` holds e_k(w_1..w_n) for 0 <= n <= N, 0 <= k <= K, with
    e_0 = 1 and e_k = 0 for k > n.  ``table[N, K]`` is the normalizer of the
    K-subset distribution.
    """

    table: np.ndarray

    @property
    def n_items(self) -> int:
        return self.table.shape[0] - 1

    @property
    def max_size(self) -> int:
        return self.table.shape[1] - 1

    @property
    def normalizer(self) -> float:
        return float(self.table[-1, -1])


def _check_weights(weights) -> list:
    w = [float(x) for x in weights]
    if not w:
        raise InvalidInputError("weight vector must be nonempty")
    for x in w:
        if not math.isfinite(x) or x < 0.0:
            raise InvalidInputError(f"weights must be finite and nonnegative, got {x}")
    return w


def _esp_rows(w: list, k: int) -> list:
    """All prefix rows [e_0..e_k] of the ESP recurrence, as plain lists."""
    rows = [[1.0] + [0.0] * k]
    prev = rows[0]
    for n, wn in enumerate(w, start=1):
        row = prev.copy()
        for j in range(min(n, k), 0, -1):
            row[j] = prev[j] + wn * prev[j - 1]
        rows.append(row)
        prev = row
    return rows


def _esp_excluding(w: list, k: int, skip: int) -> list:
    """[e_0..e_k] of the weight vector with index ``skip`` removed."""
    e = [1.0] + [0.0] * k
    for idx, wn in enumerate(w):
        if idx == skip:
            continue
        for j in range(k, 0, -1):
            e[j] += wn * e[j - 1]
    return e


def build_esp_table(weights, k: int) -> EspTable:
    """Elementary symmetric polynomials of all weight prefixes up to order k.

    Raises invalid-input when k exceeds the number of weights or any weight
    is negative or non-finite.  Exact zeros are accepted: they arise when
    exponentiated loss estimates underflow, and the table stays well defined.
    """
    w = _check_weights(weights)
    if not 0 <= k <= len(w):
        raise InvalidInputError(f"need 0 <= k <= {len(w)}, got k={k}")
    return EspTable(np.asarray(_esp_rows(w, k), dtype=np.float64))


def stabilize(cumulative_estimates, eta: float) -> np.ndarray:
    """Weights exp(-eta * (L_i - min_j L_j)) for the K-subset distribution.

    Subtracting the minimum leaves every subset probability unchanged (the
    common factor cancels against the normalizer) and pins the maximum
    weight to exactly 1.
    """
    if not (math.isfinite(eta) and eta > 0.0):
        raise InvalidInputError(f"eta must be positive and finite, got {eta}")
    est = [float(x) for x in cumulative_estimates]
    if not est:
        raise InvalidInputError("estimate vector must be nonempty")
    if not all(math.isfinite(x) for x in est):
        raise InvalidInputError("cumulative estimates must be finite")
    lo = min(est)
    # math.exp (libm) rather than np.exp: the compiled backend calls the same
    # libm function, keeping the two backends bit-identical.
    return np.array([math.exp(-eta * (x - lo)) for x in est], dtype=np.float64)


def _check_probability(p: float) -> float:
    if not (-PROB_TOLERANCE <= p <= 1.0 + PROB_TOLERANCE):
        raise NumericalInstabilityError(f"inclusion probability {p} outside [0, 1]")
    return min(max(p, 0.0), 1.0)


def sample_k_subset(weights, k: int, rng: np.random.Generator) -> tuple:
    """Draw a size-k subset with Pr[I] = prod_{i in I} w_i / e_k(w).

    Backward scan over the ESP table: visiting items from last to first,
    item i joins with probability w_i * e_{j-1}(w_1..w_{i-1}) / e_j(w_1..w_i)
    where j counts the slots still open.  One uniform draw is consumed per
    visited item.  If fewer than k weights are positive the distribution
    degenerates; the sample is then all positive-weight items plus a uniform
    fill from the zero-weight ones (the limit of the generic case).

    Returns the members as an ascending tuple of 0-based indices.
    """
    w = _check_weights(weights)
    n = len(w)
    if not 1 <= k <= n:
        raise InvalidInputError(f"need 1 <= k <= {n}, got k={k}")

    positive = [i for i in range(n) if w[i] > 0.0]
    if len(positive) < k:
        zero = [i for i in range(n) if w[i] == 0.0]
        need = k - len(positive)
        # partial Fisher-Yates over the zero-weight items
        for j in range(need):
            r = j + rand_below(rng, len(zero) - j)
            zero[j], zero[r] = zero[r], zero[j]
        return tuple(sorted(positive + zero[:need]))

    rows = _esp_rows(w, k)
    members = []
    j = k
    for i in range(n, 0, -1):
        if j == 0:
            break
        p = _check_probability(w[i - 1] * rows[i - 1][j - 1] / rows[i][j])
        if rng.random() < p:
            members.append(i - 1)
            j -= 1
    if j != 0:
        raise NumericalInstabilityError("subset scan terminated with open slots")
    members.reverse()
    return tuple(members)


def sample_many(weights, k: int, n_samples: int, rng, backend=None) -> np.ndarray:
    """n_samples independent subsets, one row each (ascending members).

    ``rng`` is a numpy Generator; the compiled backend, when available,
    consumes the identical stream from the underlying bit generator.
    """
    from . import _backend

    core = _backend.resolve(backend)
    if core is not None:
        w = np.ascontiguousarray(_check_weights(weights), dtype=np.float64)
        if not 1 <= k <= w.shape[0]:
            raise InvalidInputError(f"need 1 <= k <= {w.shape[0]}, got k={k}")
        return core.sample_k_many(w, k, n_samples, rng.bit_generator)
    out = np.empty((n_samples, k), dtype=np.int64)
    for s in range(n_samples):
        out[s] = sample_k_subset(weights, k, rng)
    return out


def marginal_inclusion(weights, k: int, arm: int) -> float:
    """Pr[arm in I] under the size-k product-weight distribution.

    Equals w_arm * e_{k-1}(w without arm) / e_k(w), clamped to [0, 1] after
    a tolerance check.  In the degenerate regime (< k positive weights) the
    marginal of the uniform-completion distribution is returned instead.
    """
    w = _check_weights(weights)
    n = len(w)
    if not 1 <= k <= n:
        raise InvalidInputError(f"need 1 <= k <= {n}, got k={k}")
    if not 0 <= arm < n:
        raise InvalidInputError(f"arm index {arm} outside [0, {n})")

    n_positive = sum(1 for x in w if x > 0.0)
    if n_positive < k:
        if w[arm] > 0.0:
            return 1.0
        return (k - n_positive) / (n - n_positive)

    z = _esp_rows(w, k)[n][k]
    reduced = _esp_excluding(w, k - 1, arm)
    return _check_probability(w[arm] * reduced[k - 1] / z)


def all_marginals(weights, k: int) -> np.ndarray:
    """Inclusion probability of every arm; the entries sum to k."""
    w = _check_weights(weights)
    return np.array([marginal_inclusion(w, k, i) for i in range(len(w))])
