import dataclasses
import logging
from typing import Any, Dict, List, Optional, Sequence, Tuple

from pytools.convergence import estimate_order_of_convergence

from green_colloc import config
from green_colloc.convlab.problems import get_solution
from green_colloc.convlab.study import judge, StudyConfig
from green_colloc.kernelop import get_kernel
from green_colloc.meshspace import make_grid, make_mesh
from green_colloc.projection import (
    divided_diff_K_sup,
    operator_decay_probe,
    residual_norm_K,
    residual_norm_KPK,
    residual_norm_PKP,
)

__all__ = [
    "ProbeSeries",
    "ProbeReport",
    "fit_slope",
    "run_scaling_probes",
]

logger = logging.getLogger(__name__)

# n-sequence of the operator halving probe, on left-endpoint r = 0 nodes
_DECAY_N_LIST = (8, 16, 32)


@dataclasses.dataclass(frozen=True)
class ProbeSeries:
    """One probe quantity over the n-sequence and its fitted log-log slope.

    For residual norms the slope is the decay order in h; for the divided-difference probes it is the
    exponent of h in the growth of the sampled sup, expected no smaller than -2r.
    """

    name: str
    n: List[int]
    values: List[float]
    slope: Optional[float]
    target: float
    two_sided: bool
    passed: bool
    detail: str = ""


@dataclasses.dataclass(frozen=True)
class ProbeReport:
    config: Dict[str, Any]
    series: List[ProbeSeries]
    operator_decay: Dict[str, Any]

    CSV_COLUMNS = ("probe", "n", "value", "slope", "target", "pass")

    @property
    def passed(self) -> bool:
        return all(s.passed for s in self.series) and bool(self.operator_decay["passed"])

    def csv_rows(self) -> List[Tuple]:
        out = []
        for s in self.series:
            for n, value in zip(s.n, s.values):
                out.append((s.name, n, value, s.slope, s.target, s.passed))
        for n, value in zip(self.operator_decay["n"], self.operator_decay["values"]):
            out.append(("operator_decay", n, value, None, None, self.operator_decay["passed"]))
        return out

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": "probes",
            "config": self.config,
            "series": [dataclasses.asdict(s) for s in self.series],
            "operator_decay": self.operator_decay,
            "passed": self.passed,
        }


def fit_slope(n_list: Sequence[int], values: Sequence[float], floor: Optional[float] = None) -> Optional[float]:
    """Least-squares exponent p of values ~ h^p over the points above the floor."""
    if floor is None:
        floor = config.probes.floor
    points = [(1.0 / n, v) for n, v in zip(n_list, values) if v >= floor]
    if len(points) < 2:
        return None
    _, order = estimate_order_of_convergence([h for h, _ in points], [v for _, v in points])
    return float(order)


def _growth_series(name: str, n_list: Sequence[int], values: List[float], r: int) -> ProbeSeries:
    floor = config.probes.floor
    slope = fit_slope(n_list, values)
    passed = slope is None or slope >= -2 * r - config.study.slope_tolerance
    # h^2r * sup must never exceed three times its value at the coarsest n
    scaled = [v * (1.0 / n) ** (2 * r) for n, v in zip(n_list, values)]
    if scaled[0] >= floor:
        passed = passed and max(scaled) <= 3.0 * scaled[0]
    detail = "scaled: " + ", ".join(f"{v:.3e}" for v in scaled)
    return ProbeSeries(name, list(n_list), values, slope, -2 * r, False, passed, detail)


def _decay_series(name: str, n_list: Sequence[int], values: List[float], target: float, two_sided: bool):
    slope = fit_slope(n_list, values)
    return ProbeSeries(name, list(n_list), values, slope, target, two_sided, judge(slope, target, two_sided))


def run_scaling_probes(cfg: StudyConfig, growth_n_list: Optional[Sequence[int]] = None) -> ProbeReport:
    """Divided-difference growth, residual-operator decay and the operator halving probe."""
    kernel = get_kernel(cfg.kernel)
    x = get_solution(cfg.solution)
    r = cfg.r
    if growth_n_list is None:
        growth_n_list = [n for n in cfg.n_list if n <= 32]

    with config.patch({"quadrature.order": cfg.quad_order}):
        grids = {n: make_grid(make_mesh(n), r, cfg.offsets) for n in {*cfg.n_list, *growth_n_list}}

        series = []
        if len(growth_n_list) >= 2:
            for repeated, name in ((False, "divided_diff_K"), (True, "divided_diff_K_repeated")):
                values = [divided_diff_K_sup(grids[n], kernel, x, repeated=repeated) for n in growth_n_list]
                series.append(_growth_series(name, growth_n_list, values, r))

        decay = (
            ("residual_norm_K", residual_norm_K, 2 * r + 2, True),
            ("residual_norm_PKP", residual_norm_PKP, 2 * r + 2 if r >= 1 else 3, False),
            ("residual_norm_KPK", residual_norm_KPK, 2 * r + 3 if r >= 1 else 4, False),
        )
        for name, probe, target, two_sided in decay:
            values = [probe(grids[n], kernel, x) for n in cfg.n_list]
            series.append(_decay_series(name, cfg.n_list, values, target, two_sided))

        operator_decay = operator_decay_probe(
            kernel, lambda n: make_grid(make_mesh(n), 0), _DECAY_N_LIST, count=10, seed=cfg.seed
        )
        if all(v < config.probes.floor for v in operator_decay["values"]):
            operator_decay["passed"] = True

    for s in series:
        logger.info(f"{s.name}: slope {s.slope} (target {s.target}), passed={s.passed}")
    logger.info(f"operator decay ratios {operator_decay['ratios']}, passed={operator_decay['passed']}")
    return ProbeReport(cfg.to_dict(), series, operator_decay)
