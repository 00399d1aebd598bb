import concurrent.futures
import dataclasses
import logging
import math
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

from pytools.convergence import estimate_order_of_convergence

from green_colloc import config
from green_colloc.convlab.problems import catalog_solutions, get_solution, manufactured_problem
from green_colloc.functions import sup_norm
from green_colloc.kernelop import builtin_kernels, FredholmProblem, get_kernel
from green_colloc.meshspace import make_grid, make_mesh
from green_colloc.solvers import iterate, iterate_modified, METHODS, solve_collocation, solve_modified, SolverFailure
from green_colloc.utils import checks

__all__ = [
    "StudyConfig",
    "StudyRow",
    "MethodSummary",
    "ConvergenceReport",
    "target_order",
    "eoc",
    "FLOOR",
    "tail_slope",
    "run_study",
]

logger = logging.getLogger(__name__)

# two-sided acceptance; the modified methods may converge faster than their proven order
_TWO_SIDED = ("collocation", "iterated")

# marks a pairwise order whose errors sit under the error floor
FLOOR = "floor"

# keys read while solving a cell; config patches are per thread, so workers re-enter them
_CELL_CONFIG = {
    "quadrature": ("order", "chunk_size"),
    "sampling": ("points_per_interval", "check_points"),
    "kernel": ("fd_step", "diagonal_tolerance"),
    "solver": (
        "cond_threshold",
        "cond_iterations",
        "residual_tolerance",
        "check_reconstruction",
        "reconstruction_tolerance",
    ),
}


@dataclasses.dataclass(frozen=True)
class StudyConfig:
    kernel: str = "bvp_green"
    solution: str = "sin_pi"
    r: int = 1
    n_list: Tuple[int, ...] = (4, 8, 16, 32, 64)
    methods: Tuple[str, ...] = METHODS
    quad_order: int = 20
    offsets: Optional[Tuple[float, ...]] = None
    seed: int = 0
    out: Optional[str] = None
    format: str = "json"

    def __post_init__(self):
        object.__setattr__(self, "n_list", tuple(int(n) for n in self.n_list))
        object.__setattr__(self, "methods", tuple(self.methods))
        if self.offsets is not None:
            object.__setattr__(self, "offsets", tuple(float(z) for z in self.offsets))
        valid, reason = self.validate()
        if not valid:
            raise ValueError(f"Unsupported input: {reason}")

    def validate(self) -> Tuple[bool, str]:
        if self.kernel not in builtin_kernels():
            return False, f"Unknown kernel {self.kernel!r}, expected one of {sorted(builtin_kernels())}"
        if self.solution not in catalog_solutions():
            return False, f"Unknown solution {self.solution!r}, expected one of {sorted(catalog_solutions())}"
        if isinstance(self.r, bool) or not isinstance(self.r, int) or not 0 <= self.r <= 3:
            return False, f"Expected 0 <= r <= 3, but got r: {self.r!r} instead."
        valid, reason = checks.validate_n_list(self.n_list)
        if not valid:
            return False, reason
        if not self.methods:
            return False, "Expected at least one method"
        for method in self.methods:
            if method not in METHODS:
                return False, f"Unknown method {method!r}, expected one of {METHODS}"
        if not 5 <= self.quad_order <= 64:
            return False, f"Expected 5 <= quad_order <= 64, but got quad_order: {self.quad_order} instead."
        valid, reason = checks.validate_offsets(self.offsets, self.r)
        if not valid:
            return False, reason
        if self.format not in ("csv", "json"):
            return False, f"Expected format csv or json, but got format: {self.format!r} instead."
        return True, ""

    def to_dict(self) -> Dict[str, Any]:
        out = dataclasses.asdict(self)
        out["n_list"] = list(self.n_list)
        out["methods"] = list(self.methods)
        out["offsets"] = None if self.offsets is None else list(self.offsets)
        return out


@dataclasses.dataclass(frozen=True)
class StudyRow:
    method: str
    n: int
    h: float
    sup_error: Optional[float]
    eoc: Optional[Union[float, str]] = None
    condition: Optional[float] = None
    kernel_evaluations: int = 0
    failure: Optional[str] = None


@dataclasses.dataclass(frozen=True)
class MethodSummary:
    method: str
    target_order: int
    tail_eoc: Optional[float]
    floor: bool
    passed: bool


@dataclasses.dataclass(frozen=True)
class ConvergenceReport:
    config: Dict[str, Any]
    rows: List[StudyRow]
    summaries: Dict[str, MethodSummary]

    CSV_COLUMNS = ("method", "n", "h", "sup_error", "eoc", "target_order", "pass")

    @property
    def passed(self) -> bool:
        return all(summary.passed for summary in self.summaries.values())

    def rows_for(self, method: str) -> List[StudyRow]:
        return [row for row in self.rows if row.method == method]

    def csv_rows(self) -> List[Tuple]:
        out = []
        for row in self.rows:
            summary = self.summaries[row.method]
            out.append((row.method, row.n, row.h, row.sup_error, row.eoc, summary.target_order, summary.passed))
        return out

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": "study",
            "config": self.config,
            "rows": [dataclasses.asdict(row) for row in self.rows],
            "summaries": {name: dataclasses.asdict(summary) for name, summary in self.summaries.items()},
            "passed": self.passed,
        }

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "ConvergenceReport":
        return cls(
            payload["config"],
            [StudyRow(**row) for row in payload["rows"]],
            {name: MethodSummary(**summary) for name, summary in payload["summaries"].items()},
        )


def target_order(method: str, r: int) -> int:
    if method == "collocation":
        return 2 * r + 1
    if method == "iterated":
        return 2 * r + 2
    if method == "modified":
        return 2 * r + 2 if r >= 1 else 3
    if method == "iterated_modified":
        return 2 * r + 3 if r >= 1 else 4
    raise ValueError(f"Unsupported method: {method!r}")


def _is_floor(error: Optional[float], floor: float) -> bool:
    return error is None or error < floor


def eoc(
    n_list: Sequence[int], errors: Sequence[Optional[float]], floor: Optional[float] = None
) -> List[Optional[Union[float, str]]]:
    """Pairwise orders log(e_k / e_k+1) / log(n_k+1 / n_k).

    A pair with an error below the floor gives ``FLOOR``; a pair with a missing error gives None.
    """
    if floor is None:
        floor = config.study.error_floor
    out = []
    for (n0, e0), (n1, e1) in zip(zip(n_list, errors), zip(n_list[1:], errors[1:])):
        if e0 is None or e1 is None:
            out.append(None)
            continue
        if _is_floor(e0, floor) or _is_floor(e1, floor):
            out.append(FLOOR)
            continue
        _, order = estimate_order_of_convergence([1.0 / n0, 1.0 / n1], [e0, e1])
        out.append(float(order))
    return out


def tail_slope(
    n_list: Sequence[int], errors: Sequence[Optional[float]], tail: int = 3, floor: Optional[float] = None
) -> Optional[float]:
    """Least-squares order over the last ``tail`` points above the floor; None if fewer than two remain."""
    if floor is None:
        floor = config.study.error_floor
    points = [(1.0 / n, e) for n, e in zip(n_list, errors) if not _is_floor(e, floor)][-tail:]
    if len(points) < 2:
        return None
    _, order = estimate_order_of_convergence([h for h, _ in points], [e for _, e in points])
    return float(order)


def judge(slope: Optional[float], target: float, two_sided: bool, tolerance: Optional[float] = None) -> bool:
    if tolerance is None:
        tolerance = config.study.slope_tolerance
    if slope is None:
        return True
    if two_sided:
        return abs(slope - target) <= tolerance
    return slope >= target - tolerance


def _cell_config(cfg: StudyConfig) -> Dict[str, Any]:
    """The caller's effective config for the solver keys, with the study's quadrature order applied."""
    snapshot = {
        f"{group}.{key}": getattr(getattr(config, group), key) for group, keys in _CELL_CONFIG.items() for key in keys
    }
    snapshot["quadrature.order"] = cfg.quad_order
    return snapshot


def _solve_cell(problem: FredholmProblem, cfg: StudyConfig, n: int, snapshot: Dict[str, Any]) -> List[StudyRow]:
    with config.patch(snapshot):
        return _solve_cell_patched(problem, cfg, n)


def _solve_cell_patched(problem: FredholmProblem, cfg: StudyConfig, n: int) -> List[StudyRow]:
    grid = make_grid(make_mesh(n), cfg.r, cfg.offsets)
    exact = problem.exact_solution
    rows = []

    def record(result):
        error = sup_norm(result.solution - exact, grid)
        if not math.isfinite(error):
            raise FloatingPointError(f"Non-finite sup error for {result.method} at n={n}")
        rows.append(
            StudyRow(result.method, n, grid.h, error, None, result.condition, result.kernel_evaluations, None)
        )
        logger.info(f"{problem.name} r={cfg.r} n={n} {result.method}: sup error {error:.6e}")

    def fail(method, exc):
        logger.warning(f"{problem.name} r={cfg.r} n={n} {method} failed: {exc}")
        rows.append(StudyRow(method, n, grid.h, None, failure=str(exc)))

    for base, iterated, solve, iterate_fn in (
        ("collocation", "iterated", solve_collocation, iterate),
        ("modified", "iterated_modified", solve_modified, iterate_modified),
    ):
        wanted = [m for m in (base, iterated) if m in cfg.methods]
        if not wanted:
            continue
        try:
            result = solve(problem, grid)
        except (SolverFailure, FloatingPointError) as exc:
            for method in wanted:
                fail(method, exc)
            continue
        for method in wanted:
            try:
                record(result if method == base else iterate_fn(problem, result))
            except (SolverFailure, FloatingPointError) as exc:
                fail(method, exc)
    return rows


def run_study(cfg: StudyConfig) -> ConvergenceReport:
    """Solves the manufactured problem at every n with every requested method and fits the orders."""
    problem = manufactured_problem(get_kernel(cfg.kernel), get_solution(cfg.solution))
    snapshot = _cell_config(cfg)
    num_workers = max(1, config.study.num_workers)
    with concurrent.futures.ThreadPoolExecutor(max_workers=num_workers) as executor:
        cells = list(executor.map(lambda n: _solve_cell(problem, cfg, n, snapshot), cfg.n_list))

    by_method = {method: {} for method in cfg.methods}
    for cell in cells:
        for row in cell:
            by_method[row.method][row.n] = row

    rows: List[StudyRow] = []
    summaries: Dict[str, MethodSummary] = {}
    for method in cfg.methods:
        errors = [by_method[method][n].sup_error for n in cfg.n_list]
        pairwise = [None] + eoc(cfg.n_list, errors)
        rows.extend(dataclasses.replace(by_method[method][n], eoc=e) for n, e in zip(cfg.n_list, pairwise))
        target = target_order(method, cfg.r)
        slope = tail_slope(cfg.n_list, errors)
        failed = any(by_method[method][n].failure is not None for n in cfg.n_list[-3:])
        passed = not failed and judge(slope, target, method in _TWO_SIDED)
        summaries[method] = MethodSummary(method, target, slope, slope is None and not failed, passed)
        logger.info(f"{problem.name} r={cfg.r} {method}: tail order {slope} (target {target}), passed={passed}")
    return ConvergenceReport(cfg.to_dict(), rows, summaries)
