from typing import Tuple

from green_colloc.kernelop import FredholmProblem
from green_colloc.meshspace import CollocationGrid
from green_colloc.solvers import iterate, iterate_modified, METHODS, solve_collocation, solve_modified, SolveResult

__all__ = [
    "collocation",
    "iterated_collocation",
    "modified_collocation",
    "iterated_modified_collocation",
    "can_use_method",
    "solve",
]


def collocation(problem: FredholmProblem, grid: CollocationGrid) -> SolveResult:
    return solve_collocation(problem, grid)


def iterated_collocation(problem: FredholmProblem, grid: CollocationGrid) -> SolveResult:
    return iterate(problem, solve_collocation(problem, grid))


def modified_collocation(problem: FredholmProblem, grid: CollocationGrid) -> SolveResult:
    return solve_modified(problem, grid)


def iterated_modified_collocation(problem: FredholmProblem, grid: CollocationGrid) -> SolveResult:
    return iterate_modified(problem, solve_modified(problem, grid))


_DISPATCH = {
    "collocation": collocation,
    "iterated": iterated_collocation,
    "modified": modified_collocation,
    "iterated_modified": iterated_modified_collocation,
}


def can_use_method(problem: FredholmProblem, grid: CollocationGrid, method: str) -> Tuple[bool, str]:
    if method not in METHODS:
        return False, f"Unknown method {method!r}, expected one of {METHODS}"
    if not isinstance(problem, FredholmProblem):
        return False, f"Expected a FredholmProblem, but got {type(problem).__name__}"
    if not isinstance(grid, CollocationGrid):
        return False, f"Expected a CollocationGrid, but got {type(grid).__name__}"
    return True, ""


def solve(problem: FredholmProblem, grid: CollocationGrid, method: str = "collocation") -> SolveResult:
    supported, reason = can_use_method(problem, grid, method)
    if not supported:
        raise ValueError(f"Unsupported input: {reason}")
    return _DISPATCH[method](problem, grid)
