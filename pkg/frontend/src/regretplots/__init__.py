"""Figure rendering for multi-player bandit regret CSVs."""

from .figures import (EmptyInputError, FigureSpec, fit_loglog,
                      render_loglog_figure, render_regret_figure)
from .io import SchemaError, Series, read_aggregate, read_sweep

__version__ = "0.1.0"

__all__ = [
    "EmptyInputError",
    "FigureSpec",
    "fit_loglog",
    "render_loglog_figure",
    "render_regret_figure",
    "SchemaError",
    "Series",
    "read_aggregate",
    "read_sweep",
    "__version__",
]
