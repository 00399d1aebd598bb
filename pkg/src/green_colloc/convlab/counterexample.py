import dataclasses
import logging
from typing import Any, Dict, List, Sequence, Tuple

from green_colloc.convlab.problems import get_solution, manufactured_problem
from green_colloc.functions import sup_norm
from green_colloc.kernelop import get_kernel
from green_colloc.meshspace import make_grid, make_mesh
from green_colloc.projection import residual, residual_norm_K
from green_colloc.solvers import iterate, solve_collocation

__all__ = [
    "CounterexampleRow",
    "CounterexampleReport",
    "run_counterexample",
]

logger = logging.getLogger(__name__)

_OFFSET = 1.0 / 3.0
_TOLERANCE = 1e-10


@dataclasses.dataclass(frozen=True)
class CounterexampleRow:
    n: int
    residual_norm: float
    residual_norm_K: float
    ratio: float
    collocation_error: float
    iterated_error: float
    iterated_ratio: float
    failures: Tuple[str, ...] = ()

    @property
    def passed(self) -> bool:
        return not self.failures


@dataclasses.dataclass(frozen=True)
class CounterexampleReport:
    rows: List[CounterexampleRow]

    CSV_COLUMNS = ("n", "residual_norm", "residual_norm_K", "ratio", "iterated_ratio", "pass")

    @property
    def passed(self) -> bool:
        return all(row.passed for row in self.rows)

    def csv_rows(self) -> List[Tuple]:
        return [
            (row.n, row.residual_norm, row.residual_norm_K, row.ratio, row.iterated_ratio, row.passed)
            for row in self.rows
        ]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": "counterexample",
            "offset": _OFFSET,
            "rows": [{**dataclasses.asdict(row), "passed": row.passed} for row in self.rows],
            "passed": self.passed,
        }


def run_counterexample(n_list: Sequence[int] = (4, 8, 16)) -> CounterexampleReport:
    """Smooth kernel s, solution 4s and one node at a third of each subinterval.

    The iterated collocation solution gains nothing here: ||K (I - P_n) phi|| = 2/(3n) stays a
    quarter of ||(I - P_n) phi|| = 8/(3n). Breached checks are reported, never raised.
    """
    kernel = get_kernel("rank_one")
    phi = get_solution("linear")
    problem = manufactured_problem(kernel, phi)
    rows = []
    for n in n_list:
        grid = make_grid(make_mesh(n), 0, (_OFFSET,))
        norm = sup_norm(residual(grid, phi), grid)
        norm_k = residual_norm_K(grid, kernel, phi)
        ratio = norm_k / norm

        collocation = solve_collocation(problem, grid)
        iterated = iterate(problem, collocation)
        collocation_error = sup_norm(collocation.solution - phi, grid)
        iterated_error = sup_norm(iterated.solution - phi, grid)
        iterated_ratio = iterated_error / collocation_error

        failures = []
        if abs(norm_k - 2.0 / (3 * n)) > _TOLERANCE:
            failures.append(f"||K(I-P_n)phi|| = {norm_k!r}, expected 2/(3n) = {2.0 / (3 * n)!r}")
        if abs(norm - 8.0 / (3 * n)) > _TOLERANCE:
            failures.append(f"||(I-P_n)phi|| = {norm!r}, expected 8/(3n) = {8.0 / (3 * n)!r}")
        if ratio < 0.25 - _TOLERANCE:
            failures.append(f"ratio {ratio!r} below 1/4")
        if iterated_ratio < 0.25 - _TOLERANCE:
            failures.append(f"iterated/collocation error ratio {iterated_ratio!r} below 1/4")
        for failure in failures:
            logger.warning(f"counterexample n={n}: {failure}")
        rows.append(
            CounterexampleRow(
                n, norm, norm_k, ratio, collocation_error, iterated_error, iterated_ratio, tuple(failures)
            )
        )
    return CounterexampleReport(rows)
