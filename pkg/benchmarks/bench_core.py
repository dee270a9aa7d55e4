#!/usr/bin/env python3
"""Times the compiled kernels against the pure-Python fallback.

Also asserts, for every workload, that the two backends return identical
results (they share random streams and a common draw discipline, so the
traces must match bit for bit, not just statistically).

Usage: python benchmarks/bench_core.py
"""

import time

import numpy as np

from coordplay import _backend, kdpp, runner
from coordplay.engine import GameConfig, idealized_eta


def timed(fn, repeat=1):
    best = float("inf")
    result = None
    for _ in range(repeat):
        start = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - start)
    return result, best


def check_equal(name, a, b):
    if isinstance(a, np.ndarray):
        assert np.array_equal(a, b), f"{name}: backend results differ"
    else:
        for x, y in zip(a, b):
            assert np.array_equal(np.asarray(x), np.asarray(y)), (
                f"{name}: backend results differ")


def trace_arrays(trace):
    return (trace.ts, trace.charged, trace.benchmark,
            np.array([trace.collisions, trace.quiet_rounds,
                      trace.play_collisions]))


def main():
    if not _backend.HAVE_CORE:
        raise SystemExit("compiled core not installed; nothing to compare "
                         "(build with `pip install -e . --no-build-isolation`)")

    rows = []

    w = np.exp(np.random.default_rng(0).uniform(-3, 0, size=8))
    rng_seed = 1234

    def kdpp_batch(backend):
        rng = np.random.default_rng(rng_seed)
        return kdpp.sample_many(w, 4, 200000, rng, backend=backend)

    compiled, t_c = timed(lambda: kdpp_batch("compiled"))
    pure, t_p = timed(lambda: kdpp_batch("pure"))
    check_equal("kdpp", compiled, pure)
    rows.append(("k-subset sampling (200k draws, N=8, K=4)", t_c, t_p))

    horizon = 100000
    sched = runner.build_schedule("exp1", 8, 4, horizon, 0.05, 42, 0)
    losses = sched.materialize(horizon)

    eta = idealized_eta(8, horizon)
    compiled, t_c = timed(lambda: runner.run_idealized(
        8, 4, horizon, eta, losses, 42, 0, backend="compiled"))
    pure, t_p = timed(lambda: runner.run_idealized(
        8, 4, horizon, eta, losses, 42, 0, backend="pure"))
    check_equal("idealized", trace_arrays(compiled)[:3], trace_arrays(pure)[:3])
    rows.append((f"idealized metaplayer (T={horizon})", t_c, t_p))

    config = GameConfig.from_horizon(8, 4, horizon, seed=42)
    compiled, t_c = timed(lambda: runner.run_cp(
        config, losses, 42, 0, backend="compiled"))
    pure, t_p = timed(lambda: runner.run_cp(
        config, losses, 42, 0, backend="pure"))
    check_equal("cp", trace_arrays(compiled), trace_arrays(pure))
    rows.append((f"coordinate-and-play run (T={horizon})", t_c, t_p))

    compiled, t_c = timed(lambda: runner.run_cp(
        config, losses, 42, 0, quiet_free=True, backend="compiled"))
    pure, t_p = timed(lambda: runner.run_cp(
        config, losses, 42, 0, quiet_free=True, backend="pure"))
    check_equal("cp-quietfree", trace_arrays(compiled), trace_arrays(pure))
    rows.append((f"quiet-free variant run (T={horizon})", t_c, t_p))

    compiled, t_c = timed(lambda: runner.run_mc(
        8, 4, horizon, 3000, losses, 42, 0, backend="compiled"))
    pure, t_p = timed(lambda: runner.run_mc(
        8, 4, horizon, 3000, losses, 42, 0, backend="pure"))
    check_equal("mc", trace_arrays(compiled), trace_arrays(pure))
    rows.append((f"musical chairs run (T={horizon})", t_c, t_p))

    width = max(len(r[0]) for r in rows)
    print(f"{'workload':<{width}}  compiled      pure          speedup")
    for name, t_c, t_p in rows:
        print(f"{name:<{width}}  {t_c * 1e3:9.1f} ms  {t_p * 1e3:9.1f} ms  "
              f"{t_p / t_c:6.1f}x")
    print("\nall workloads returned bit-identical results on both backends")


if __name__ == "__main__":
    main()
