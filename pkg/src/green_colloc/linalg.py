import dataclasses
import logging
from typing import Callable, Optional, Tuple

import torch

from green_colloc import config
from green_colloc.utils.checks import torch_version_compare
from green_colloc.utils.types import as_tensor, DTYPE

__all__ = [
    "SolverFailure",
    "SingularSystemError",
    "LinearSystem",
    "linear_solve",
    "condition_estimate",
]

logger = logging.getLogger(__name__)


class SolverFailure(RuntimeError):
    """A method cannot produce a trustworthy solution at this n."""


class SingularSystemError(SolverFailure):
    pass


@dataclasses.dataclass(frozen=True, eq=False)
class LinearSystem:
    """A c = b over the nodes in lexicographic (j, k) order."""

    matrix: torch.Tensor
    rhs: torch.Tensor

    def __post_init__(self):
        matrix = as_tensor(self.matrix)
        rhs = as_tensor(self.rhs)
        if matrix.dim() != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ValueError(f"Unsupported input: expected a square matrix, but got shape {tuple(matrix.shape)}")
        if rhs.shape != (matrix.shape[0],):
            raise ValueError(
                f"Unsupported input: expected rhs of shape ({matrix.shape[0]},), but got {tuple(rhs.shape)}"
            )
        if not bool(torch.isfinite(matrix).all()) or not bool(torch.isfinite(rhs).all()):
            raise ValueError("Unsupported input: linear system has non-finite entries")
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "rhs", rhs)

    @property
    def dim(self) -> int:
        return self.rhs.numel()


Solve = Callable[[torch.Tensor], torch.Tensor]


def _factorize(matrix: torch.Tensor) -> Tuple[Solve, Solve]:
    if torch_version_compare("ge", "1.13.0"):
        lu, pivots, info = torch.linalg.lu_factor_ex(matrix)
        if int(info) > 0:
            raise SingularSystemError(f"Exact zero pivot at position {int(info)} of a {matrix.shape[0]}-row system")

        def solve(b, adjoint=False):
            return torch.linalg.lu_solve(lu, pivots, b[:, None], adjoint=adjoint)[:, 0]

        return solve, lambda b: solve(b, adjoint=True)

    # torch<1.13.0
    factors = []
    for m in (matrix, matrix.T.contiguous()):
        lu, pivots, info = torch.lu(m, get_infos=True)
        if int(info) > 0:
            raise SingularSystemError(f"Exact zero pivot at position {int(info)} of a {m.shape[0]}-row system")
        factors.append((lu, pivots))
    return tuple(lambda b, f=f: torch.lu_solve(b[:, None], *f)[:, 0] for f in factors)


def condition_estimate(
    matrix: torch.Tensor, solve: Solve, solve_adjoint: Solve, iterations: Optional[int] = None
) -> float:
    """||A||_1 times the Hager power-iteration estimate of ||A^-1||_1; a lower bound of cond_1(A)."""
    if iterations is None:
        iterations = config.solver.cond_iterations
    d = matrix.shape[0]
    x = torch.full((d,), 1.0 / d, dtype=DTYPE)
    estimate = 0.0
    for i in range(iterations):
        y = solve(x)
        estimate = float(y.abs().sum())
        xi = torch.where(y >= 0, 1.0, -1.0).to(DTYPE)
        z = solve_adjoint(xi)
        j = int(z.abs().argmax())
        if i > 0 and float(z.abs().max()) <= float(z @ x):
            break
        x = torch.zeros(d, dtype=DTYPE)
        x[j] = 1.0
    return float(matrix.abs().sum(dim=0).max()) * estimate


def linear_solve(system: LinearSystem) -> Tuple[torch.Tensor, float]:
    """Dense LU with partial pivoting; returns the solution and a 1-norm condition estimate."""
    solve, solve_adjoint = _factorize(system.matrix)
    cond = condition_estimate(system.matrix, solve, solve_adjoint)
    logger.debug(f"factorized {system.dim}x{system.dim} system, condition estimate {cond:.3e}")
    if not cond <= config.solver.cond_threshold:
        raise SolverFailure(
            f"Numerically singular system: condition estimate {cond:.3e} exceeds {config.solver.cond_threshold:.1e}"
        )
    coefficients = solve(system.rhs)
    residual = float((system.matrix @ coefficients - system.rhs).abs().max())
    bound = config.solver.residual_tolerance * (1.0 + float(system.rhs.abs().max()))
    if not residual <= bound:
        raise SolverFailure(f"Linear solve residual {residual:.3e} exceeds {bound:.3e}")
    return coefficients, cond
