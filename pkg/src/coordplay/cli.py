"""Experiment runner CLI.

Two subcommands.  ``run`` executes seeded multi-run simulations of the
selected algorithms on one scenario and writes one raw trace CSV per run,
one aggregate CSV per algorithm, and a summary.json echoing every resolved
parameter.  ``sweep`` repeats the experiment across a grid of horizons,
records final regrets, and fits a least-squares line to log(mean final
regret) vs log(T).

Schemas:
  raw trace:  t,charged_loss,benchmark_loss,online_regret
  aggregate:  t,mean_regret,std_regret
  sweep:      T,mean_final_regret,std_final_regret  (+ trailing '# fit ...'
              comment line with slope and intercept)

A config file (``--config``, key=value lines, '#' comments) may supply any
flag; explicit flags win over the file, the file wins over defaults.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import _backend, runner
from .engine import (GameConfig, default_eta, default_rank_rounds,
                     default_tau, idealized_eta)
from .errors import CoordPlayError, InvalidInputError

DEFAULT_GAP = 0.05
DEFAULT_LEARN_ROUNDS = 3000
SCENARIOS = ("exp1", "exp2", "exp3", "file")


def _float_repr(x: float) -> str:
    return repr(float(x))


def write_aggregate_csv(path, ts, mean, std) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("t,mean_regret,std_regret\n")
        for t, m, s in zip(ts, mean, std):
            fh.write(f"{int(t)},{_float_repr(m)},{_float_repr(s)}\n")


def fit_loglog(horizons, mean_regrets):
    """Least squares of log(mean regret) on log(T); None when undefined."""
    if len(horizons) < 2 or any(m <= 0.0 for m in mean_regrets):
        return None
    slope, intercept = np.polyfit(np.log(np.asarray(horizons, dtype=np.float64)),
                                  np.log(np.asarray(mean_regrets, dtype=np.float64)), 1)
    return float(slope), float(intercept)


def resolve_params(algo, n_arms, n_players, horizon, overrides):
    """Per-algorithm protocol parameters plus their provenance labels."""
    params, sources = {}, {}
    if algo in ("cp", "cp-quietfree"):
        tau = overrides.get("tau")
        sources["tau"] = "override" if tau is not None else "default"
        if tau is None:
            tau = default_tau(n_arms, n_players, horizon)
        eta = overrides.get("eta")
        sources["eta"] = "override" if eta is not None else "default"
        if eta is None:
            eta = default_eta(n_arms, horizon, tau)
        rank_rounds = overrides.get("rank_rounds")
        sources["rank_rounds"] = "override" if rank_rounds is not None else "default"
        if rank_rounds is None:
            rank_rounds = default_rank_rounds(n_players, horizon)
        params.update(tau=int(tau), eta=float(eta), rank_rounds=int(rank_rounds))
    elif algo == "mc":
        learn = overrides.get("learn_rounds")
        sources["learn_rounds"] = "override" if learn is not None else "default"
        params["learn_rounds"] = int(learn if learn is not None else DEFAULT_LEARN_ROUNDS)
    elif algo == "idealized":
        eta = overrides.get("eta")
        sources["eta"] = "override" if eta is not None else "default"
        params["eta"] = float(eta if eta is not None else idealized_eta(n_arms, horizon))
    else:
        raise InvalidInputError(f"unknown algorithm {algo!r}")
    return params, sources


def _execute_run(payload):
    """One (algorithm, run) job; module-level so worker processes can load it."""
    algo = payload["algo"]
    n_arms = payload["n_arms"]
    n_players = payload["n_players"]
    horizon = payload["horizon"]
    seed = payload["seed"]
    run_index = payload["run_index"]
    record_every = payload["record_every"]
    params = payload["params"]

    schedule = runner.build_schedule(
        payload["scenario"], n_arms, n_players, horizon, payload["gap"],
        seed, run_index, loss_file=payload.get("loss_file"))
    losses = schedule.materialize(horizon)

    if algo in ("cp", "cp-quietfree"):
        config = GameConfig(n_arms=n_arms, n_players=n_players, horizon=horizon,
                            tau=params["tau"], eta=params["eta"],
                            rank_rounds=params["rank_rounds"], seed=seed,
                            record_every=record_every)
        trace = runner.run_cp(config, losses, seed, run_index,
                              quiet_free=(algo == "cp-quietfree"))
    elif algo == "mc":
        trace = runner.run_mc(n_arms, n_players, horizon,
                              params["learn_rounds"], losses, seed, run_index,
                              record_every=record_every)
    else:
        trace = runner.run_idealized(n_arms, n_players, horizon, params["eta"],
                                     losses, seed, run_index,
                                     record_every=record_every)
    return trace


def _run_jobs(payloads, workers):
    if workers <= 1:
        return [_execute_run(p) for p in payloads]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_execute_run, payloads))


def run_experiment(spec) -> dict:
    """Execute spec['algos'] x spec['runs'] simulations and write artifacts."""
    out = Path(spec["out"])
    out.mkdir(parents=True, exist_ok=True)
    summary = {
        "scenario": spec["scenario"],
        "n_arms": spec["n_arms"],
        "n_players": spec["n_players"],
        "horizon": spec["horizon"],
        "runs": spec["runs"],
        "base_seed": spec["seed"],
        "record_every": spec["record_every"],
        "gap": spec["gap"],
        "loss_file": spec.get("loss_file"),
        "backend": "compiled" if _backend.HAVE_CORE else "pure",
        "workers": spec["workers"],
        "algorithms": {},
    }
    for algo in spec["algos"]:
        params, sources = resolve_params(algo, spec["n_arms"], spec["n_players"],
                                         spec["horizon"], spec["overrides"])
        payloads = [{
            "algo": algo, "scenario": spec["scenario"], "n_arms": spec["n_arms"],
            "n_players": spec["n_players"], "horizon": spec["horizon"],
            "seed": spec["seed"], "run_index": i, "gap": spec["gap"],
            "record_every": spec["record_every"], "params": params,
            "loss_file": spec.get("loss_file"),
        } for i in range(spec["runs"])]
        traces = _run_jobs(payloads, spec["workers"])
        regrets = np.vstack([tr.regret for tr in traces])
        ts = traces[0].ts
        mean = regrets.mean(axis=0)
        std = regrets.std(axis=0)
        for i, tr in enumerate(traces):
            tr.write_csv(out / f"{algo}_run{i:02d}.csv")
        write_aggregate_csv(out / f"{algo}_aggregate.csv", ts, mean, std)
        summary["algorithms"][algo] = {
            "params": params,
            "param_sources": sources,
            "final_regret_mean": float(mean[-1]),
            "final_regret_std": float(std[-1]),
            "per_run_final_regret": [tr.final_regret for tr in traces],
        }
    with open(out / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return summary


def run_sweep(spec) -> dict:
    """Final accumulated regret across a horizon grid, plus loglog fits."""
    out = Path(spec["out"])
    out.mkdir(parents=True, exist_ok=True)
    grid = spec["t_grid"]
    summary = {
        "scenario": spec["scenario"],
        "n_arms": spec["n_arms"],
        "n_players": spec["n_players"],
        "t_grid": list(grid),
        "runs": spec["runs"],
        "base_seed": spec["seed"],
        "gap": spec["gap"],
        "backend": "compiled" if _backend.HAVE_CORE else "pure",
        "workers": spec["workers"],
        "algorithms": {},
    }
    for algo in spec["algos"]:
        rows = []
        per_horizon_params = {}
        for horizon in grid:
            params, sources = resolve_params(algo, spec["n_arms"],
                                             spec["n_players"], horizon,
                                             spec["overrides"])
            per_horizon_params[str(horizon)] = {"params": params, "sources": sources}
            payloads = [{
                "algo": algo, "scenario": spec["scenario"], "n_arms": spec["n_arms"],
                "n_players": spec["n_players"], "horizon": horizon,
                "seed": spec["seed"], "run_index": i, "gap": spec["gap"],
                "record_every": horizon, "params": params,
                "loss_file": spec.get("loss_file"),
            } for i in range(spec["runs"])]
            traces = _run_jobs(payloads, spec["workers"])
            finals = np.array([tr.final_regret for tr in traces])
            rows.append((horizon, float(finals.mean()), float(finals.std())))
        fit = fit_loglog([r[0] for r in rows], [r[1] for r in rows])
        path = out / f"{algo}_sweep.csv"
        with open(path, "w", newline="") as fh:
            fh.write("T,mean_final_regret,std_final_regret\n")
            for horizon, m, s in rows:
                fh.write(f"{horizon},{_float_repr(m)},{_float_repr(s)}\n")
            if fit is not None:
                fh.write(f"# fit slope={fit[0]!r} intercept={fit[1]!r}\n")
        summary["algorithms"][algo] = {
            "rows": [{"T": h, "mean_final_regret": m, "std_final_regret": s}
                     for h, m, s in rows],
            "slope": None if fit is None else fit[0],
            "intercept": None if fit is None else fit[1],
            "per_horizon_params": per_horizon_params,
        }
    with open(out / "sweep_summary.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return summary


def _parse_algos(text):
    algos = tuple(a.strip() for a in text.split(",") if a.strip())
    for a in algos:
        if a not in runner.ALGORITHMS:
            raise InvalidInputError(
                f"unknown algorithm {a!r}; choose from {runner.ALGORITHMS}")
    if not algos:
        raise InvalidInputError("no algorithms selected")
    return algos


def _parse_grid(text):
    try:
        grid = tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise InvalidInputError(f"bad t-grid {text!r}")
    if not grid or list(grid) != sorted(set(grid)):
        raise InvalidInputError("t-grid must be nonempty and strictly ascending")
    return grid


_OPTION_TYPES = {
    "scenario": str, "algo": str, "arms": int, "players": int,
    "horizon": int, "runs": int, "seed": int, "block_size": int,
    "eta": float, "rank_rounds": int, "mc_learn_rounds": int, "gap": float,
    "loss_file": str, "record_every": int, "out": str, "t_grid": str,
    "workers": int,
}


def _load_config_file(path):
    values = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise InvalidInputError(f"{path}:{lineno}: expected key=value")
            key, _, raw = line.partition("=")
            key = key.strip().replace("-", "_")
            if key not in _OPTION_TYPES:
                raise InvalidInputError(f"{path}:{lineno}: unknown option {key!r}")
            values[key] = _OPTION_TYPES[key](raw.strip())
    return values


def _add_common_flags(p):
    p.add_argument("--config", help="key=value file supplying any flag")
    p.add_argument("--scenario", choices=SCENARIOS)
    p.add_argument("--algo", help="comma-separated: cp, cp-quietfree, mc, idealized")
    p.add_argument("--arms", type=int, help="number of arms N")
    p.add_argument("--players", type=int, help="number of players K")
    p.add_argument("--runs", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--block-size", type=int, dest="block_size",
                   help="override the block length tau")
    p.add_argument("--eta", type=float, help="override the learning rate")
    p.add_argument("--rank-rounds", type=int, dest="rank_rounds",
                   help="override the ranking-phase length")
    p.add_argument("--mc-learn-rounds", type=int, dest="mc_learn_rounds",
                   help="override the baseline's learning-phase length")
    p.add_argument("--gap", type=float,
                   help="minimum top-K reward gap for scenario exp1")
    p.add_argument("--loss-file", dest="loss_file",
                   help="CSV loss table for scenario 'file'")
    p.add_argument("--record-every", type=int, dest="record_every")
    p.add_argument("--workers", type=int)
    p.add_argument("--out", help="output directory")


def _merged(args, key, fallback):
    value = getattr(args, key, None)
    if value is not None:
        return value
    if args.config_values and key in args.config_values:
        return args.config_values[key]
    return fallback


def build_parser():
    parser = argparse.ArgumentParser(
        prog="coordplay",
        description="seeded multi-player bandit experiments with CSV artifacts")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="online-regret traces at one horizon")
    _add_common_flags(p_run)
    p_run.add_argument("--horizon", type=int, help="number of rounds T")
    p_sweep = sub.add_parser("sweep", help="final regret across a horizon grid")
    _add_common_flags(p_sweep)
    p_sweep.add_argument("--t-grid", dest="t_grid",
                         help="comma-separated ascending horizons")
    return parser


def _build_spec(args) -> dict:
    args.config_values = _load_config_file(args.config) if args.config else {}
    spec = {
        "scenario": _merged(args, "scenario", "exp1"),
        "algos": _parse_algos(_merged(args, "algo", "cp,mc")),
        "n_arms": int(_merged(args, "arms", 8)),
        "n_players": int(_merged(args, "players", 4)),
        "runs": int(_merged(args, "runs", 10)),
        "seed": int(_merged(args, "seed", 1)),
        "gap": float(_merged(args, "gap", DEFAULT_GAP)),
        "record_every": int(_merged(args, "record_every", 100)),
        "workers": int(_merged(args, "workers", 1)),
        "out": _merged(args, "out", "coordplay-out"),
        "loss_file": _merged(args, "loss_file", None),
        "overrides": {
            "tau": _merged(args, "block_size", None),
            "eta": _merged(args, "eta", None),
            "rank_rounds": _merged(args, "rank_rounds", None),
            "learn_rounds": _merged(args, "mc_learn_rounds", None),
        },
    }
    if spec["seed"] < 0:
        raise InvalidInputError("seed must be nonnegative")
    if spec["runs"] < 1:
        raise InvalidInputError("runs must be >= 1")
    return spec


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = _build_spec(args)
        if args.command == "run":
            spec["horizon"] = int(_merged(args, "horizon", 240000))
            summary = run_experiment(spec)
            for algo, info in summary["algorithms"].items():
                print(f"{algo}: final regret {info['final_regret_mean']:.1f} "
                      f"+- {info['final_regret_std']:.1f}  params={info['params']}")
        else:
            grid_text = _merged(args, "t_grid", None)
            if grid_text is None:
                raise InvalidInputError("sweep needs --t-grid")
            spec["t_grid"] = _parse_grid(str(grid_text))
            summary = run_sweep(spec)
            for algo, info in summary["algorithms"].items():
                slope = info["slope"]
                slope_text = "n/a" if slope is None else f"{slope:.4f}"
                print(f"{algo}: loglog slope {slope_text} over {len(info['rows'])} horizons")
        print(f"artifacts written to {spec['out']}")
    except (CoordPlayError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
