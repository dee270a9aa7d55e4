"""Figure rendering: banded regret curves and loglog sweep fits.

Conventions: the musical-chairs baseline plots blue, the coordination
protocol green; the learning-phase boundary is a black dashed vertical
line and change-points are red dashed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .io import Series, read_aggregate, read_sweep

ALGO_COLORS = {
    "mc": "tab:blue",
    "cp": "tab:green",
    "cp-quietfree": "darkgreen",
    "idealized": "tab:orange",
}
FALLBACK_COLORS = ("tab:purple", "tab:brown", "tab:red", "tab:gray")

T0_STYLE = {"color": "black", "linestyle": "--"}
CHANGE_STYLE = {"color": "red", "linestyle": "--"}


class EmptyInputError(ValueError):
    """Nothing left to plot after filtering."""


@dataclass(frozen=True)
class FigureSpec:
    """What to draw: per-algorithm CSV paths, event markers, axis mode.

    ``events`` holds (kind, t) pairs with kind 't0' (learning-phase end,
    black dashed) or 'change' (loss change-point, red dashed).  ``t_min``
    and ``t_max`` optionally restrict the plotted range.
    """

    inputs: dict
    output: str
    mode: str = "linear"
    events: tuple = ()
    t_min: Optional[float] = None
    t_max: Optional[float] = None
    title: Optional[str] = None

    def __post_init__(self):
        if self.mode not in ("linear", "loglog"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if not self.inputs:
            raise EmptyInputError("no input series given")
        for kind, _ in self.events:
            if kind not in ("t0", "change"):
                raise ValueError(f"unknown event kind {kind!r}")


def _color_for(algo, index):
    return ALGO_COLORS.get(algo, FALLBACK_COLORS[index % len(FALLBACK_COLORS)])


def _filtered(series: Series, spec: FigureSpec) -> Series:
    keep = np.ones(len(series.x), dtype=bool)
    if spec.t_min is not None:
        keep &= series.x >= spec.t_min
    if spec.t_max is not None:
        keep &= series.x <= spec.t_max
    if not keep.any():
        raise EmptyInputError("no rows inside the requested t range")
    return Series(x=series.x[keep], mean=series.mean[keep],
                  std=series.std[keep], fit_comment=series.fit_comment)


def fit_loglog(x, mean):
    """Least squares of log(mean) on log(x); the same definition the
    simulator's sweep summary uses.  None when undefined."""
    x = np.asarray(x, dtype=np.float64)
    mean = np.asarray(mean, dtype=np.float64)
    if len(x) < 2 or np.any(mean <= 0.0):
        return None
    slope, intercept = np.polyfit(np.log(x), np.log(mean), 1)
    return float(slope), float(intercept)


def render_regret_figure(spec: FigureSpec):
    """Online-regret curves with +-1 std bands and event markers.

    Returns the matplotlib figure after saving it to ``spec.output``.
    """
    fig, ax = plt.subplots(figsize=(8, 5))
    for index, (algo, path) in enumerate(spec.inputs.items()):
        series = _filtered(read_aggregate(path), spec)
        color = _color_for(algo, index)
        ax.plot(series.x, series.mean, color=color, label=algo)
        ax.fill_between(series.x, series.mean - series.std,
                        series.mean + series.std, color=color, alpha=0.25,
                        linewidth=0)
    for kind, t in spec.events:
        style = T0_STYLE if kind == "t0" else CHANGE_STYLE
        ax.axvline(t, **style)
    ax.set_xlabel("round t")
    ax.set_ylabel("online regret")
    if spec.title:
        ax.set_title(spec.title)
    ax.legend()
    fig.savefig(spec.output)
    return fig


def render_loglog_figure(spec: FigureSpec):
    """Final accumulated regret vs horizon on log-log axes, one fitted line
    per algorithm with the slope printed in the legend.

    A single-point grid is drawn as a scatter without a fit.  Returns
    (figure, {algo: slope or None}) after saving.
    """
    fig, ax = plt.subplots(figsize=(8, 5))
    slopes = {}
    for index, (algo, path) in enumerate(spec.inputs.items()):
        series = _filtered(read_sweep(path), spec)
        color = _color_for(algo, index)
        ax.scatter(series.x, series.mean, color=color, zorder=3)
        lower = np.maximum(series.mean - series.std,
                           np.finfo(float).tiny)
        ax.fill_between(series.x, lower, series.mean + series.std,
                        color=color, alpha=0.25, linewidth=0)
        fit = fit_loglog(series.x, series.mean)
        if fit is None:
            slopes[algo] = None
            ax.plot([], [], color=color, label=f"{algo} (no fit)")
            continue
        slope, intercept = fit
        slopes[algo] = slope
        grid = np.linspace(np.log(series.x[0]), np.log(series.x[-1]), 50)
        ax.plot(np.exp(grid), np.exp(intercept + slope * grid), color=color,
                label=f"{algo} fit (slope {slope:.4f})")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("horizon T")
    ax.set_ylabel("final accumulated regret")
    if spec.title:
        ax.set_title(spec.title)
    ax.legend()
    fig.savefig(spec.output)
    return fig, slopes
