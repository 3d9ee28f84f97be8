"""Diagonal (iterative) regularization for max-margin classification.

The solvers run proximal gradient steps on the dual of the hinge-penalized
problem while the regularization parameter decays, so the iteration count
itself plays the role of the regularization parameter.
"""

from .model import Dataset, Kernel, SignedGram, gram, signed_matrix
from .oracle import OracleSolution, solve_max_margin
from .solvers import Schedule, SolverConfig, run, solve_tikhonov_dual

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "Kernel",
    "SignedGram",
    "gram",
    "signed_matrix",
    "OracleSolution",
    "solve_max_margin",
    "Schedule",
    "SolverConfig",
    "run",
    "solve_tikhonov_dual",
]
