"""Command-line front end: render one figure from CSV artifacts.

Examples:
    regretplot --in cp=out/cp_aggregate.csv --in mc=out/mc_aggregate.csv \
        --events t0=3000,change=15000,change=20000 --out exp2.png
    regretplot --mode loglog --in cp=out/cp_sweep.csv --out sweep.png
"""

from __future__ import annotations

import argparse
import sys

from .figures import (EmptyInputError, FigureSpec, render_loglog_figure,
                      render_regret_figure)
from .io import SchemaError


def parse_inputs(pairs):
    inputs = {}
    for pair in pairs:
        algo, sep, path = pair.partition("=")
        if not sep or not algo or not path:
            raise ValueError(f"--in expects algo=path, got {pair!r}")
        inputs[algo] = path
    return inputs


def parse_events(text):
    if not text:
        return ()
    events = []
    for token in text.split(","):
        kind, sep, value = token.partition("=")
        if not sep:
            raise ValueError(f"--events expects kind=t, got {token!r}")
        events.append((kind.strip(), float(value)))
    return tuple(events)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="regretplot",
        description="render regret curves or loglog sweeps from CSVs")
    parser.add_argument("--in", dest="inputs", action="append", required=True,
                        metavar="ALGO=PATH", help="input CSV, repeatable")
    parser.add_argument("--mode", choices=("linear", "loglog"),
                        default="linear")
    parser.add_argument("--events", default="",
                        help="comma-separated kind=t markers "
                             "(kinds: t0, change)")
    parser.add_argument("--tmin", type=float, default=None)
    parser.add_argument("--tmax", type=float, default=None)
    parser.add_argument("--title", default=None)
    parser.add_argument("--out", required=True, help="output image path")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = FigureSpec(inputs=parse_inputs(args.inputs), output=args.out,
                          mode=args.mode, events=parse_events(args.events),
                          t_min=args.tmin, t_max=args.tmax, title=args.title)
        if spec.mode == "loglog":
            _, slopes = render_loglog_figure(spec)
            for algo, slope in slopes.items():
                text = "no fit" if slope is None else f"slope {slope!r}"
                print(f"{algo}: {text}")
        else:
            render_regret_figure(spec)
        print(f"wrote {args.out}")
    except (ValueError, OSError, SchemaError, EmptyInputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
