"""Multi-player adversarial bandit simulator.

K players share N arms; colliding players are charged a full loss and learn
nothing else.  The library implements the coordinate-and-play protocol (a
blocked exponential-weights learner over K-subsets whose coordinator assigns
arms through deliberate collisions), the idealized full-communication
metaplayer it imitates, a musical-chairs baseline, the loss scenarios used
for evaluation, and a CLI that runs seeded experiments and writes CSV
traces.

Hot kernels run through the compiled extension `coordplay._core` when it is
installed; otherwise the pure-Python implementations take over.  Both paths
consume identical random streams and produce bit-identical traces.
"""

from ._backend import HAVE_CORE
from .engine import (GameConfig, RegretTrace, benchmark_best_k, default_eta,
                     default_rank_rounds, default_tau, idealized_eta,
                     resolve_round, run_game)
from .errors import (CoordPlayError, InvalidInputError, LossFileError,
                     NumericalInstabilityError, ProtocolViolationError)

__version__ = "0.1.0"

__all__ = [
    "HAVE_CORE",
    "GameConfig",
    "RegretTrace",
    "benchmark_best_k",
    "default_eta",
    "default_rank_rounds",
    "default_tau",
    "idealized_eta",
    "resolve_round",
    "run_game",
    "CoordPlayError",
    "InvalidInputError",
    "LossFileError",
    "NumericalInstabilityError",
    "ProtocolViolationError",
    "__version__",
]
