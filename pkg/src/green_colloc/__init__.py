try:
    from ._version import version as __version__, version_tuple
except ImportError:
    __version__ = "unknown version"
    version_tuple = (0, 0, "unknown version")

from . import config, functions, kernelop, linalg, meshspace, projection, solvers
from .green_colloc_interface import (
    can_use_method,
    collocation,
    iterated_collocation,
    iterated_modified_collocation,
    modified_collocation,
    solve,
)
from .kernelop import builtin_kernels, FredholmProblem, GreensKernel
from .meshspace import make_grid, make_mesh
from .solvers import SolveResult, SolverFailure

__all__ = [
    "can_use_method",
    "collocation",
    "iterated_collocation",
    "iterated_modified_collocation",
    "modified_collocation",
    "solve",
    "builtin_kernels",
    "FredholmProblem",
    "GreensKernel",
    "make_grid",
    "make_mesh",
    "SolveResult",
    "SolverFailure",
]
