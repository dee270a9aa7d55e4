"""Readers for the simulator's CSV artifacts.

Two schemas are understood:
  aggregate: t,mean_regret,std_regret
  sweep:     T,mean_final_regret,std_final_regret  (optionally followed by a
             '# fit slope=... intercept=...' comment line)

Readers validate the header and name the offending column on mismatch.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

AGGREGATE_COLUMNS = ("t", "mean_regret", "std_regret")
SWEEP_COLUMNS = ("T", "mean_final_regret", "std_final_regret")


class SchemaError(ValueError):
    """A CSV did not match the expected column layout."""


@dataclass(frozen=True)
class Series:
    """One algorithm's curve: x positions, mean values, std band."""

    x: np.ndarray
    mean: np.ndarray
    std: np.ndarray
    fit_comment: Optional[dict] = None


def _check_header(line, expected, path):
    got = tuple(c.strip() for c in line.split(","))
    if got != expected:
        for want, have in zip(expected, got + ("<missing>",) * len(expected)):
            if want != have:
                raise SchemaError(
                    f"{path}: expected column {want!r}, found {have!r}")
        raise SchemaError(f"{path}: expected columns {expected}, found {got}")


def _parse_fit_comment(line):
    # "# fit slope=<float> intercept=<float>"
    fields = {}
    for token in line.lstrip("#").split():
        if "=" in token:
            key, _, value = token.partition("=")
            fields[key] = float(value)
    return fields or None


def _read(path, expected):
    lines = Path(path).read_text().splitlines()
    if not lines:
        raise SchemaError(f"{path}: empty file")
    _check_header(lines[0], expected, path)
    rows = []
    fit = None
    for line in lines[1:]:
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            if "slope" in line:
                fit = _parse_fit_comment(line)
            continue
        fields = line.split(",")
        if len(fields) != len(expected):
            raise SchemaError(
                f"{path}: row has {len(fields)} fields, expected {len(expected)}")
        rows.append([float(f) for f in fields])
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    data = np.asarray(rows, dtype=np.float64)
    return Series(x=data[:, 0], mean=data[:, 1], std=data[:, 2], fit_comment=fit)


def read_aggregate(path) -> Series:
    return _read(path, AGGREGATE_COLUMNS)


def read_sweep(path) -> Series:
    return _read(path, SWEEP_COLUMNS)
