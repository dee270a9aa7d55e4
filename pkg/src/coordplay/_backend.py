"""Selects the compiled kernels when present, the pure-Python path otherwise.

Set COORDPLAY_FORCE_PURE=1 to ignore an installed extension (used by the
benchmark and the backend-equivalence tests).
"""

import os

try:
    from . import _core
except ImportError:  # extension not built; everything falls back to Python
    _core = None

if os.environ.get("COORDPLAY_FORCE_PURE"):
    _core = None

HAVE_CORE = _core is not None


def resolve(backend=None):
    """Map a backend request to the _core module or None (pure Python).

    ``None`` means auto, "compiled" requires the extension, "pure" forces
    the fallback.
    """
    if backend is None:
        return _core
    if backend == "pure":
        return None
    if backend == "compiled":
        if _core is None:
            raise RuntimeError("compiled backend requested but coordplay._core is not installed")
        return _core
    raise ValueError(f"unknown backend {backend!r}")
