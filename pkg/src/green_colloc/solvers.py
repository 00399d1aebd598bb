import dataclasses
import logging
from typing import Optional

import torch

from green_colloc import config
from green_colloc.functions import EvaluableFunction
from green_colloc.kernelop import apply_K, count_kernel_evaluations, FredholmProblem, GreensKernel, k_image
from green_colloc.linalg import LinearSystem, linear_solve, SingularSystemError, SolverFailure
from green_colloc.meshspace import CollocationGrid, PiecewisePolynomial
from green_colloc.projection import as_function, residual
from green_colloc.utils.types import DTYPE

__all__ = [
    "METHODS",
    "SolverFailure",
    "SingularSystemError",
    "SolveResult",
    "basis_function",
    "kernel_basis_matrix",
    "solve_collocation",
    "iterate",
    "solve_modified",
    "iterate_modified",
]

logger = logging.getLogger(__name__)

METHODS = ("collocation", "iterated", "modified", "iterated_modified")


@dataclasses.dataclass(frozen=True, eq=False)
class SolveResult:
    method: str
    grid: CollocationGrid
    solution: EvaluableFunction
    nodal: Optional[PiecewisePolynomial] = None
    condition: float = float("nan")
    kernel_evaluations: int = 0


def basis_function(grid: CollocationGrid) -> EvaluableFunction:
    """The global Lagrange basis as one block function t -> (L_1(t), ..., L_d(t))."""
    return EvaluableFunction(grid.basis_matrix, grid.mesh.breakpoints.tolist(), f"L(n={grid.n}, r={grid.r})")


def kernel_basis_matrix(kernel: GreensKernel, grid: CollocationGrid) -> torch.Tensor:
    """A[i, j] = (K L_j)(tau_i)."""
    return apply_K(kernel, basis_function(grid), grid.flat_nodes)


def _check_grid(problem: FredholmProblem, grid: CollocationGrid):
    if not isinstance(problem, FredholmProblem):
        raise ValueError(f"Unsupported input: expected a FredholmProblem, but got {type(problem).__name__}")
    if not isinstance(grid, CollocationGrid):
        raise ValueError(f"Unsupported input: expected a CollocationGrid, but got {type(grid).__name__}")


def solve_collocation(problem: FredholmProblem, grid: CollocationGrid) -> SolveResult:
    """phi_n^C - P_n K phi_n^C = P_n f, solved for the nodal values of phi_n^C."""
    _check_grid(problem, grid)
    with count_kernel_evaluations() as counter:
        a = kernel_basis_matrix(problem.kernel, grid)
    system = LinearSystem(torch.eye(grid.dim, dtype=DTYPE) - a, problem.f.evaluate(grid.flat_nodes))
    coefficients, cond = linear_solve(system)
    logger.debug(f"collocation n={grid.n} r={grid.r}: dim={grid.dim}, kernel evaluations={counter.count}")
    nodal = PiecewisePolynomial(grid, coefficients)
    return SolveResult(
        "collocation",
        grid,
        as_function(nodal, f"phi_n^C(n={grid.n}, r={grid.r})"),
        nodal,
        cond,
        counter.count,
    )


def _iterated(problem: FredholmProblem, source: EvaluableFunction, description: str) -> EvaluableFunction:
    image = k_image(problem.kernel, source)
    f = problem.f
    return EvaluableFunction(lambda t: image.evaluate(t) + f.evaluate(t), (*source.kinks, *f.kinks), description)


def iterate(problem: FredholmProblem, result: SolveResult) -> SolveResult:
    """phi_n^S = K phi_n^C + f, evaluated lazily."""
    if result.method != "collocation":
        raise ValueError(f"Unsupported input: expected a collocation result, but got {result.method}")
    grid = result.grid
    solution = _iterated(problem, result.solution, f"phi_n^S(n={grid.n}, r={grid.r})")
    return SolveResult("iterated", grid, solution, None, result.condition, result.kernel_evaluations)


def _reconstruction_residual(
    problem: FredholmProblem,
    grid: CollocationGrid,
    phi: EvaluableFunction,
    u: EvaluableFunction,
    ku_nodal: torch.Tensor,
) -> float:
    """sup over uniform samples of |phi - K_n^M phi - f|, with K_n^M phi = P_n K phi + K u - P_n K u."""
    s = torch.linspace(0.0, 1.0, config.sampling.check_points, dtype=DTYPE)
    kphi_nodal = apply_K(problem.kernel, phi, grid.flat_nodes)
    p_kphi = PiecewisePolynomial(grid, kphi_nodal)(s)
    p_ku = PiecewisePolynomial(grid, ku_nodal)(s)
    ku = apply_K(problem.kernel, u, s)
    out = phi.evaluate(s) - p_kphi - ku + p_ku - problem.f.evaluate(s)
    return float(out.abs().max())


def solve_modified(problem: FredholmProblem, grid: CollocationGrid) -> SolveResult:
    """(I - K_n^M) phi_n^M = f with K_n^M = P_n K + K P_n - P_n K P_n.

    With u = P_n phi_n^M = sum c_j L_j the nodal system is (I - A - B) c = f(tau) + [K (I - P_n) f](tau),
    where A[i, j] = (K L_j)(tau_i) and B[i, j] = (K (I - P_n) K L_j)(tau_i); then
    phi_n^M = u + (I - P_n) f + (I - P_n) K u.
    """
    _check_grid(problem, grid)
    kernel, f = problem.kernel, problem.f
    nodes = grid.flat_nodes
    breakpoints = grid.mesh.breakpoints.tolist()
    with count_kernel_evaluations() as counter:
        a = kernel_basis_matrix(kernel, grid)
        images = k_image(kernel, basis_function(grid))
        # columns are (I - P_n) K L_j
        columns = EvaluableFunction(
            lambda t: images.evaluate(t) - grid.basis_matrix(t) @ a, breakpoints, "(I - P_n) K L"
        )
        b = apply_K(kernel, columns, nodes)
        rhs = f.evaluate(nodes) + apply_K(kernel, residual(grid, f), nodes)
    logger.debug(f"modified n={grid.n} r={grid.r}: dim={grid.dim}, kernel evaluations={counter.count}")

    system = LinearSystem(torch.eye(grid.dim, dtype=DTYPE) - a - b, rhs)
    coefficients, cond = linear_solve(system)
    nodal = PiecewisePolynomial(grid, coefficients)
    u = as_function(nodal)
    ku = k_image(kernel, u)
    ku_nodal = a @ coefficients
    correction = PiecewisePolynomial(grid, coefficients - f.evaluate(nodes) - ku_nodal)

    phi = EvaluableFunction(
        lambda t: correction(t) + f.evaluate(t) + ku.evaluate(t),
        (*breakpoints, *f.kinks),
        f"phi_n^M(n={grid.n}, r={grid.r})",
    ).memoized()

    if config.solver.check_reconstruction:
        breach = _reconstruction_residual(problem, grid, phi, u, ku_nodal)
        logger.debug(f"modified n={grid.n} r={grid.r}: reconstruction residual {breach:.3e}")
        if not breach <= config.solver.reconstruction_tolerance:
            raise SolverFailure(
                f"Modified collocation reconstruction residual {breach:.3e} exceeds "
                f"{config.solver.reconstruction_tolerance:.1e} at n={grid.n}"
            )
    return SolveResult("modified", grid, phi, nodal, cond, counter.count)


def iterate_modified(problem: FredholmProblem, result: SolveResult) -> SolveResult:
    """phi~_n^M = K phi_n^M + f, evaluated lazily."""
    if result.method != "modified":
        raise ValueError(f"Unsupported input: expected a modified collocation result, but got {result.method}")
    grid = result.grid
    solution = _iterated(problem, result.solution, f"phi~_n^M(n={grid.n}, r={grid.r})")
    return SolveResult("iterated_modified", grid, solution, result.nodal, result.condition, result.kernel_evaluations)
