# cython: language_level=3
"""Compiled twins of the hot simulation loops.

Every routine here mirrors a pure-Python implementation in the package,
drawing from the same PCG64 bit generators with the same draw discipline
(one raw double per decision, floor(u*n) integer draws, descending
Fisher-Yates).  Arithmetic matches CPython float semantics: libm exp, no
FMA contraction, identical association orders.  Given the same seeds, both
backends produce bit-identical traces; tests and the benchmark enforce it.
"""

from cpython.pycapsule cimport PyCapsule_GetPointer
from libc.math cimport exp
from numpy.random cimport bitgen_t

import numpy as np

from coordplay.engine import record_points
from coordplay.errors import InvalidInputError, NumericalInstabilityError

cdef double PROB_TOL = 1e-9


cdef bitgen_t* get_bg(object bit_generator) except NULL:
    return <bitgen_t*> PyCapsule_GetPointer(bit_generator.capsule, "BitGenerator")


cdef inline double next_d(bitgen_t* bg) noexcept:
    return bg.next_double(bg.state)


cdef inline long rand_below_c(bitgen_t* bg, long n) noexcept:
    cdef long i = <long>(next_d(bg) * n)
    return n - 1 if i >= n else i


cdef void esp_fill(double* w, long n, long k, double* e) noexcept:
    # e is a flat (n+1) x (k+1) grid of prefix elementary symmetric polynomials
    cdef long i, j, jmax, base, prev
    e[0] = 1.0
    for j in range(1, k + 1):
        e[j] = 0.0
    for i in range(1, n + 1):
        base = i * (k + 1)
        prev = base - (k + 1)
        for j in range(k + 1):
            e[base + j] = e[prev + j]
        jmax = i if i < k else k
        for j in range(jmax, 0, -1):
            e[base + j] = e[prev + j] + w[i - 1] * e[prev + j - 1]


cdef double checked_prob(double p) except -1.0:
    if not (-PROB_TOL <= p <= 1.0 + PROB_TOL):
        raise NumericalInstabilityError(
            f"inclusion probability {p} outside [0, 1]")
    if p < 0.0:
        return 0.0
    if p > 1.0:
        return 1.0
    return p


cdef long count_positive(double* w, long n) noexcept:
    cdef long i, c = 0
    for i in range(n):
        if w[i] > 0.0:
            c += 1
    return c


cdef int subset_sample(double* w, long n, long k, double* e, long* scratch,
                       bitgen_t* bg, long* members) except -1:
    """Members (ascending) of one product-weight K-subset draw.

    Uses the degenerate completion when fewer than k weights are positive,
    otherwise fills ``e`` and runs the backward ESP scan.
    """
    cdef long npos = count_positive(w, n)
    cdef long i, j, r, need, nzero, tmp, m
    cdef double p
    if npos < k:
        nzero = 0
        m = 0
        for i in range(n):
            if w[i] > 0.0:
                members[m] = i
                m += 1
            else:
                scratch[nzero] = i
                nzero += 1
        need = k - npos
        for j in range(need):
            r = j + rand_below_c(bg, nzero - j)
            tmp = scratch[j]
            scratch[j] = scratch[r]
            scratch[r] = tmp
        for j in range(need):
            members[m] = scratch[j]
            m += 1
        # insertion sort ascending (mirrors sorted())
        for i in range(1, k):
            tmp = members[i]
            j = i - 1
            while j >= 0 and members[j] > tmp:
                members[j + 1] = members[j]
                j -= 1
            members[j + 1] = tmp
        return 0

    esp_fill(w, n, k, e)
    j = k
    m = 0
    for i in range(n, 0, -1):
        if j == 0:
            break
        p = checked_prob(w[i - 1] * e[(i - 1) * (k + 1) + (j - 1)]
                         / e[i * (k + 1) + j])
        if next_d(bg) < p:
            members[m] = i - 1
            m += 1
            j -= 1
    if j != 0:
        raise NumericalInstabilityError("subset scan terminated with open slots")
    # collected descending; reverse to ascending
    for i in range(k // 2):
        tmp = members[i]
        members[i] = members[k - 1 - i]
        members[k - 1 - i] = tmp
    return 0


cdef double marginal_c(double* w, long n, long k, long arm,
                       double* e_red) except -1.0:
    """Pr[arm in subset]; e_red is scratch of length k (reduced ESPs)."""
    cdef long npos = count_positive(w, n)
    cdef long i, j
    cdef double z, p
    if npos < k:
        if w[arm] > 0.0:
            return 1.0
        return <double>(k - npos) / <double>(n - npos)
    # full normalizer e_k(w) via the same prefix recurrence, 1-d in-place
    e_red[0] = 1.0
    for j in range(1, k + 1):
        e_red[j] = 0.0
    for i in range(n):
        for j in range(k, 0, -1):
            e_red[j] += w[i] * e_red[j - 1]
    z = e_red[k]
    # reduced ESPs without ``arm``, up to order k-1
    e_red[0] = 1.0
    for j in range(1, k):
        e_red[j] = 0.0
    for i in range(n):
        if i == arm:
            continue
        for j in range(k - 1, 0, -1):
            e_red[j] += w[i] * e_red[j - 1]
    p = w[arm] * e_red[k - 1] / z
    return checked_prob(p)


cdef void shuffle_c(long* items, long k, bitgen_t* bg) noexcept:
    cdef long j, r, tmp
    for j in range(k - 1, 0, -1):
        r = rand_below_c(bg, j + 1)
        tmp = items[j]
        items[j] = items[r]
        items[r] = tmp


cdef void stabilize_c(double* cumest, long n, double eta, double* w) noexcept:
    cdef long i
    cdef double lo = cumest[0]
    for i in range(1, n):
        if cumest[i] < lo:
            lo = cumest[i]
    for i in range(n):
        w[i] = exp(-eta * (cumest[i] - lo))


cdef double best_k_sum(double* cumulative, long n, long k, double* scratch) noexcept:
    # ascending insertion sort then ascending partial sum (matches sorted()[:k])
    cdef long i, j
    cdef double v, total
    for i in range(n):
        scratch[i] = cumulative[i]
    for i in range(1, n):
        v = scratch[i]
        j = i - 1
        while j >= 0 and scratch[j] > v:
            scratch[j + 1] = scratch[j]
            j -= 1
        scratch[j + 1] = v
    total = 0.0
    for i in range(k):
        total += scratch[i]
    return total


# ---------------------------------------------------------------------------
# K-DPP entry points (compiled twins of coordplay.kdpp)
# ---------------------------------------------------------------------------

def esp_rows(double[::1] w, long k):
    """The (n+1) x (k+1) prefix ESP table as an ndarray."""
    cdef long n = w.shape[0]
    out = np.zeros((n + 1, k + 1), dtype=np.float64)
    cdef double[:, ::1] view = out
    esp_fill(&w[0], n, k, &view[0, 0])
    return out


def sample_k_subset(double[::1] w, long k, object bit_generator):
    cdef long n = w.shape[0]
    if not 1 <= k <= n:
        raise InvalidInputError(f"need 1 <= k <= {n}, got k={k}")
    cdef bitgen_t* bg = get_bg(bit_generator)
    e = np.zeros((n + 1) * (k + 1), dtype=np.float64)
    scratch = np.zeros(n, dtype=np.int64)
    members = np.zeros(k, dtype=np.int64)
    cdef double[::1] ev = e
    cdef long[::1] sv = scratch
    cdef long[::1] mv = members
    subset_sample(&w[0], n, k, &ev[0], <long*>&sv[0], bg, <long*>&mv[0])
    return members


def sample_k_many(double[::1] w, long k, Py_ssize_t n_samples,
                  object bit_generator):
    cdef long n = w.shape[0]
    if not 1 <= k <= n:
        raise InvalidInputError(f"need 1 <= k <= {n}, got k={k}")
    cdef bitgen_t* bg = get_bg(bit_generator)
    e = np.zeros((n + 1) * (k + 1), dtype=np.float64)
    scratch = np.zeros(n, dtype=np.int64)
    out = np.zeros((n_samples, k), dtype=np.int64)
    cdef double[::1] ev = e
    cdef long[::1] sv = scratch
    cdef long[:, ::1] ov = out
    cdef Py_ssize_t s
    for s in range(n_samples):
        subset_sample(&w[0], n, k, &ev[0], <long*>&sv[0], bg, <long*>&ov[s, 0])
    return out


def marginal(double[::1] w, long k, long arm):
    cdef long n = w.shape[0]
    if not 1 <= k <= n:
        raise InvalidInputError(f"need 1 <= k <= {n}, got k={k}")
    if not 0 <= arm < n:
        raise InvalidInputError(f"arm index {arm} outside [0, {n})")
    e = np.zeros(k + 1, dtype=np.float64)
    cdef double[::1] ev = e
    return marginal_c(&w[0], n, k, arm, &ev[0])


def ranking_trials(long n_players, long rank_rounds, long n_trials,
                   object bit_generator):
    """Number of trials (out of n_trials) in which all players got ranked."""
    cdef bitgen_t* bg = get_bg(bit_generator)
    ranks_arr = np.zeros(n_players, dtype=np.int64)
    picks_arr = np.zeros(n_players, dtype=np.int64)
    counts_arr = np.zeros(n_players, dtype=np.int64)
    cdef long[::1] ranks = ranks_arr
    cdef long[::1] picks = picks_arr
    cdef long[::1] counts = counts_arr
    cdef long trial, t, kk, n_ranked, success = 0
    for trial in range(n_trials):
        for kk in range(n_players):
            ranks[kk] = 0
        n_ranked = 0
        t = 0
        while t < rank_rounds and n_ranked < n_players:
            for kk in range(n_players):
                if ranks[kk] > 0:
                    picks[kk] = ranks[kk] - 1
                else:
                    picks[kk] = rand_below_c(bg, n_players)
            for kk in range(n_players):
                counts[kk] = 0
            for kk in range(n_players):
                counts[picks[kk]] += 1
            for kk in range(n_players):
                if ranks[kk] == 0 and counts[picks[kk]] == 1:
                    ranks[kk] = picks[kk] + 1
                    n_ranked += 1
            t += 1
        if n_ranked == n_players:
            success += 1
    return success


# ---------------------------------------------------------------------------
# Full-run loops
# ---------------------------------------------------------------------------

def run_idealized(double[:, ::1] losses, long k, double eta,
                  long record_every, object bit_generator):
    """Compiled twin of metaplayer.run_idealized_metaplayer."""
    cdef long horizon = losses.shape[0]
    cdef long n = losses.shape[1]
    cdef bitgen_t* bg = get_bg(bit_generator)

    ts = record_points(horizon, record_every)
    charged_out = np.empty(len(ts), dtype=np.float64)
    bench_out = np.empty(len(ts), dtype=np.float64)
    cdef long[::1] ts_v = ts
    cdef double[::1] charged_v = charged_out
    cdef double[::1] bench_v = bench_out

    cumest_a = np.zeros(n, dtype=np.float64)
    w_a = np.zeros(n, dtype=np.float64)
    cum_true_a = np.zeros(n, dtype=np.float64)
    scratch_d_a = np.zeros(n + (n + 1) * (k + 1) + (k + 1), dtype=np.float64)
    members_a = np.zeros(k, dtype=np.int64)
    order_a = np.zeros(k, dtype=np.int64)
    iscratch_a = np.zeros(n, dtype=np.int64)
    cdef double[::1] cumest = cumest_a
    cdef double[::1] w = w_a
    cdef double[::1] cum_true = cum_true_a
    cdef double[::1] sd = scratch_d_a
    cdef long[::1] members = members_a
    cdef long[::1] order = order_a
    cdef long[::1] iscr = iscratch_a

    cdef double* sort_scratch = &sd[0]
    cdef double* e_grid = &sd[n]
    cdef double* e_red = &sd[n + (n + 1) * (k + 1)]

    cdef long t, i, rec = 0, observed
    cdef double charged = 0.0, val, marg, est

    for t in range(horizon):
        stabilize_c(&cumest[0], n, eta, &w[0])
        subset_sample(&w[0], n, k, e_grid, <long*>&iscr[0], bg, <long*>&members[0])
        for i in range(k):
            order[i] = members[i]
        shuffle_c(<long*>&order[0], k, bg)
        for i in range(k):
            charged += losses[t, members[i]]
        observed = order[0]
        val = losses[t, observed]
        marg = marginal_c(&w[0], n, k, observed, e_red)
        if marg <= 0.0:
            raise NumericalInstabilityError(
                f"marginal of observed arm {observed} is {marg}")
        est = k * val / marg
        cumest[observed] += est
        for i in range(n):
            cum_true[i] += losses[t, i]
        if t + 1 == ts_v[rec]:
            charged_v[rec] = charged
            bench_v[rec] = best_k_sum(&cum_true[0], n, k, sort_scratch)
            rec += 1

    return ts, charged_out, bench_out


def run_mc(double[:, ::1] losses, long k, long learn_rounds,
           long record_every, list bit_generators):
    """Compiled twin of a run_game over MusicalChairsPlayer instances."""
    cdef long horizon = losses.shape[0]
    cdef long n = losses.shape[1]
    cdef long kk, i, j, t, a, rec = 0
    cdef bitgen_t* bgs[64]
    if k > 64:
        raise InvalidInputError("compiled backend supports at most 64 players")
    for kk in range(k):
        bgs[kk] = get_bg(bit_generators[kk])

    ts = record_points(horizon, record_every)
    charged_out = np.empty(len(ts), dtype=np.float64)
    bench_out = np.empty(len(ts), dtype=np.float64)
    cdef long[::1] ts_v = ts
    cdef double[::1] charged_v = charged_out
    cdef double[::1] bench_v = bench_out

    sums_a = np.zeros((k, n), dtype=np.float64)
    counts_a = np.zeros((k, n), dtype=np.int64)
    means_a = np.zeros(n, dtype=np.float64)
    top_a = np.zeros((k, k), dtype=np.int64)
    ranked_a = np.zeros(n, dtype=np.int64)
    owned_a = np.full(k, -1, dtype=np.int64)
    frozen_a = np.zeros(k, dtype=np.int64)
    last_a = np.zeros(k, dtype=np.int64)
    actions_a = np.zeros(k, dtype=np.int64)
    arm_counts_a = np.zeros(n, dtype=np.int64)
    cum_true_a = np.zeros(n, dtype=np.float64)
    scratch_a = np.zeros(n, dtype=np.float64)
    cdef double[:, ::1] sums = sums_a
    cdef long[:, ::1] counts = counts_a
    cdef double[::1] means = means_a
    cdef long[:, ::1] top = top_a
    cdef long[::1] ranked = ranked_a
    cdef long[::1] owned = owned_a
    cdef long[::1] frozen = frozen_a
    cdef long[::1] last = last_a
    cdef long[::1] actions = actions_a
    cdef long[::1] arm_counts = arm_counts_a
    cdef double[::1] cum_true = cum_true_a
    cdef double[::1] scratch = scratch_a

    cdef double charged = 0.0
    cdef long n_coll = 0, n_quiet = 0
    cdef long tmp, coll

    for t in range(horizon):
        for kk in range(k):
            if t < learn_rounds:
                a = rand_below_c(bgs[kk], n)
                last[kk] = a
            elif owned[kk] >= 0:
                a = owned[kk]
            else:
                if not frozen[kk]:
                    # rank arms by (estimated mean reward desc, index asc)
                    for i in range(n):
                        if counts[kk, i] > 0:
                            means[i] = sums[kk, i] / counts[kk, i]
                        else:
                            means[i] = 0.0
                        ranked[i] = i
                    for i in range(1, n):
                        tmp = ranked[i]
                        j = i - 1
                        while j >= 0 and (means[ranked[j]] < means[tmp] or
                                          (means[ranked[j]] == means[tmp]
                                           and ranked[j] > tmp)):
                            ranked[j + 1] = ranked[j]
                            j -= 1
                        ranked[j + 1] = tmp
                    for i in range(k):
                        top[kk, i] = ranked[i]
                    frozen[kk] = 1
                a = top[kk, rand_below_c(bgs[kk], k)]
                last[kk] = a
            actions[kk] = a
        for i in range(n):
            arm_counts[i] = 0
        for kk in range(k):
            arm_counts[actions[kk]] += 1
        for kk in range(k):
            a = actions[kk]
            coll = 1 if arm_counts[a] >= 2 else 0
            if coll:
                charged += 1.0
                n_coll += 1
            else:
                charged += losses[t, a]
            if t < learn_rounds:
                if not coll:
                    sums[kk, last[kk]] += 1.0 - losses[t, a]
                    counts[kk, last[kk]] += 1
            elif owned[kk] < 0 and not coll:
                owned[kk] = last[kk]
        for i in range(n):
            cum_true[i] += losses[t, i]
        if t + 1 == ts_v[rec]:
            charged_v[rec] = charged
            bench_v[rec] = best_k_sum(&cum_true[0], n, k, &scratch[0])
            rec += 1

    return ts, charged_out, bench_out, n_coll, n_quiet, 0


def run_cp(double[:, ::1] losses, long k, long tau, double eta, long t_r,
           long quiet_free, long record_every, list bit_generators):
    """Compiled twin of a run_game over CpPlayer instances."""
    cdef long horizon = losses.shape[0]
    cdef long n = losses.shape[1]
    cdef long kk, i, j, t, a, rec = 0
    cdef bitgen_t* bgs[64]
    if k > 64:
        raise InvalidInputError("compiled backend supports at most 64 players")
    for kk in range(k):
        bgs[kk] = get_bg(bit_generators[kk])

    ts = record_points(horizon, record_every)
    charged_out = np.empty(len(ts), dtype=np.float64)
    bench_out = np.empty(len(ts), dtype=np.float64)
    cdef long[::1] ts_v = ts
    cdef double[::1] charged_v = charged_out
    cdef double[::1] bench_v = bench_out

    cdef long coordinate_len = (k - 1) * n
    cdef long n_blocks = (horizon - t_r) // tau
    cdef long blocks_end = t_r + n_blocks * tau

    rank_a = np.zeros(k, dtype=np.int64)
    actions_a = np.zeros(k, dtype=np.int64)
    arm_counts_a = np.zeros(n, dtype=np.int64)
    locked_a = np.full(k, -1, dtype=np.int64)
    saw_park_a = np.zeros(k, dtype=np.int64)
    last_a = np.zeros(k, dtype=np.int64)
    order_a = np.zeros(k, dtype=np.int64)
    members_a = np.zeros(k, dtype=np.int64)
    iscr_a = np.zeros(n, dtype=np.int64)
    cumest_a = np.zeros(n, dtype=np.float64)
    wblock_a = np.zeros(n, dtype=np.float64)
    acc_a = np.zeros(n, dtype=np.float64)
    cum_true_a = np.zeros(n, dtype=np.float64)
    sd_a = np.zeros(n + (n + 1) * (k + 1) + (k + 1), dtype=np.float64)
    cdef long[::1] rank = rank_a
    cdef long[::1] actions = actions_a
    cdef long[::1] arm_counts = arm_counts_a
    cdef long[::1] locked = locked_a
    cdef long[::1] saw_park = saw_park_a
    cdef long[::1] last = last_a
    cdef long[::1] order = order_a
    cdef long[::1] members = members_a
    cdef long[::1] iscr = iscr_a
    cdef double[::1] cumest = cumest_a
    cdef double[::1] wblock = wblock_a
    cdef double[::1] acc = acc_a
    cdef double[::1] cum_true = cum_true_a
    cdef double[::1] sd = sd_a
    cdef double* sort_scratch = &sd[0]
    cdef double* e_grid = &sd[n]
    cdef double* e_red = &sd[n + (n + 1) * (k + 1)]

    cdef double charged = 0.0, v, marg, est
    cdef long n_coll = 0, n_quiet = 0, n_play_coll = 0
    cdef long coord_idx = -1, coord_collided_sub = -1, coord_last = -1
    cdef long rib, r_cur, in_coordinate, target, rk, local, coll, own

    # --- ranking phase ---
    for t in range(t_r):
        for kk in range(k):
            if rank[kk] > 0:
                actions[kk] = rank[kk] - 1
            else:
                actions[kk] = rand_below_c(bgs[kk], k)
        for i in range(n):
            arm_counts[i] = 0
        for kk in range(k):
            arm_counts[actions[kk]] += 1
        for kk in range(k):
            a = actions[kk]
            if arm_counts[a] >= 2:
                charged += 1.0
                n_coll += 1
            else:
                charged += losses[t, a]
                if rank[kk] == 0:
                    rank[kk] = a + 1
        for i in range(n):
            cum_true[i] += losses[t, i]
        if t + 1 == ts_v[rec]:
            charged_v[rec] = charged
            bench_v[rec] = best_k_sum(&cum_true[0], n, k, sort_scratch)
            rec += 1

    for kk in range(k):
        if rank[kk] == 1:
            coord_idx = kk

    # --- block phase ---
    for t in range(t_r, blocks_end):
        rib = (t - t_r) % tau
        if rib == 0:
            if coord_idx >= 0:
                stabilize_c(&cumest[0], n, eta, &wblock[0])
                subset_sample(&wblock[0], n, k, e_grid, <long*>&iscr[0],
                              bgs[coord_idx], <long*>&members[0])
                for i in range(k):
                    order[i] = members[i]
                shuffle_c(<long*>&order[0], k, bgs[coord_idx])
                coord_collided_sub = -1
                for i in range(n):
                    acc[i] = 0.0
            for kk in range(k):
                locked[kk] = -1
                saw_park[kk] = 0
        in_coordinate = 1 if rib < coordinate_len else 0
        r_cur = 2 + rib // n if in_coordinate else 0

        for kk in range(k):
            if kk == coord_idx:
                if not in_coordinate:
                    a = order[0]
                else:
                    target = order[r_cur - 1]
                    if quiet_free and target == 0:
                        a = target
                    elif coord_collided_sub == r_cur:
                        a = order[0]
                    else:
                        a = target
                coord_last = a
            elif rank[kk] >= 2:
                rk = rank[kk]
                if not in_coordinate:
                    if locked[kk] >= 0:
                        a = locked[kk]
                    else:
                        a = rand_below_c(bgs[kk], n)
                elif r_cur == rk:
                    if locked[kk] >= 0:
                        a = locked[kk]
                    else:
                        a = rib - (rk - 2) * n
                    last[kk] = a
                else:
                    a = 0 if quiet_free else -1
            else:
                a = rand_below_c(bgs[kk], n)
            actions[kk] = a

        for i in range(n):
            arm_counts[i] = 0
        for kk in range(k):
            if actions[kk] >= 0:
                arm_counts[actions[kk]] += 1

        for kk in range(k):
            a = actions[kk]
            if a < 0:
                charged += 1.0
                n_quiet += 1
                continue
            coll = 1 if arm_counts[a] >= 2 else 0
            if coll:
                charged += 1.0
                n_coll += 1
                if not in_coordinate:
                    n_play_coll += 1
            else:
                charged += losses[t, a]
            if kk == coord_idx:
                if coll:
                    if in_coordinate:
                        coord_collided_sub = r_cur
                else:
                    acc[a] += losses[t, a]
            elif rank[kk] >= 2 and in_coordinate and r_cur == rank[kk]:
                local = rib - (rank[kk] - 2) * n
                if locked[kk] < 0 and coll:
                    if quiet_free and last[kk] == 0:
                        saw_park[kk] = 1
                    else:
                        locked[kk] = last[kk]
                if locked[kk] < 0 and local == n - 1 and quiet_free and saw_park[kk]:
                    locked[kk] = 0

        for i in range(n):
            cum_true[i] += losses[t, i]
        if t + 1 == ts_v[rec]:
            charged_v[rec] = charged
            bench_v[rec] = best_k_sum(&cum_true[0], n, k, sort_scratch)
            rec += 1

        if rib == tau - 1 and coord_idx >= 0:
            own = order[0]
            v = acc[own] / tau
            marg = marginal_c(&wblock[0], n, k, own, e_red)
            if marg <= 0.0:
                raise NumericalInstabilityError(
                    f"marginal of observed arm {own} is {marg}")
            est = k * v / marg
            cumest[own] += est

    # --- trailing rounds ---
    for t in range(blocks_end, horizon):
        for kk in range(k):
            actions[kk] = rand_below_c(bgs[kk], n)
        for i in range(n):
            arm_counts[i] = 0
        for kk in range(k):
            arm_counts[actions[kk]] += 1
        for kk in range(k):
            a = actions[kk]
            if arm_counts[a] >= 2:
                charged += 1.0
                n_coll += 1
            else:
                charged += losses[t, a]
        for i in range(n):
            cum_true[i] += losses[t, i]
        if t + 1 == ts_v[rec]:
            charged_v[rec] = charged
            bench_v[rec] = best_k_sum(&cum_true[0], n, k, sort_scratch)
            rec += 1

    return ts, charged_out, bench_out, n_coll, n_quiet, n_play_coll
