import argparse
import logging
import sys
from typing import Any, Dict, List, Optional

from green_colloc import config
from green_colloc.convlab.counterexample import run_counterexample
from green_colloc.convlab.probes import run_scaling_probes
from green_colloc.convlab.problems import get_solution, manufactured_problem
from green_colloc.convlab.report import emit_report, load_report
from green_colloc.convlab.study import run_study, StudyConfig
from green_colloc.functions import sup_norm
from green_colloc.green_colloc_interface import solve
from green_colloc.kernelop import get_kernel
from green_colloc.meshspace import make_grid, make_mesh
from green_colloc.solvers import SolverFailure

__all__ = ["main", "parse_config_file", "build_parser"]

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(filename)s:%(lineno)d %(levelname)s %(message)s"


def _int_list(text: str) -> List[int]:
    return [int(v) for v in text.replace(",", " ").split()]


def _float_list(text: str) -> List[float]:
    return [float(v) for v in text.replace(",", " ").split()]


def _str_list(text: str) -> List[str]:
    return [v for v in text.replace(",", " ").split()]


_FIELDS = {
    "kernel": str,
    "solution": str,
    "r": int,
    "n_list": _int_list,
    "methods": _str_list,
    "quad_order": int,
    "offsets": _float_list,
    "seed": int,
    "out": str,
    "format": str,
}


def parse_config_file(path: str) -> Dict[str, Any]:
    """``key = value`` lines mirroring StudyConfig; ``#`` starts a comment, lists are comma separated."""
    values = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key = value, got {line!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            key = key.replace("-", "_")
            if key not in _FIELDS:
                raise ValueError(f"{path}:{lineno}: unknown key {key!r}, expected one of {sorted(_FIELDS)}")
            values[key] = _FIELDS[key](value)
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="green-colloc",
        description="Collocation solvers and convergence studies for Fredholm equations with Green's function kernels.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value file mirroring the study configuration.")
    common.add_argument("--kernel", help="Builtin kernel name (default: bvp_green).")
    common.add_argument("--solution", help="Catalog exact solution (default: sin_pi).")
    common.add_argument("--r", type=int, help="Half-degree r of the piecewise polynomials (default: 1).")
    common.add_argument("--n-list", dest="n_list", type=_int_list, help="Comma separated subinterval counts.")
    common.add_argument("--methods", type=_str_list, help="Comma separated methods.")
    common.add_argument("--quad-order", dest="quad_order", type=int, help="Gauss points per segment (default: 20).")
    common.add_argument("--offsets", type=_float_list, help="Comma separated node offsets in [0, 1].")
    common.add_argument("--seed", type=int, help="Seed of the random probe functions.")
    common.add_argument("--out", help="Output path of the report.")
    common.add_argument("--format", choices=["csv", "json"], help="Report format (default: json).")
    common.add_argument("--num-workers", dest="num_workers", type=int, help="Concurrent n-cells of a study.")
    common.add_argument("-v", "--verbose", action="store_true", help="Debug logging.")

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("solve", parents=[common], help="Solve one problem with one method and print sup errors.")
    sub.add_parser("study", parents=[common], help="Full order-of-convergence study.")
    sub.add_parser("probes", parents=[common], help="Divided-difference and residual-operator scalings.")
    counter = sub.add_parser("counterexample", parents=[common], help="Smooth-kernel counterexample values.")
    counter.set_defaults(counter_n_list=(4, 8, 16))
    report = sub.add_parser("report", parents=[common], help="Re-emit a stored JSON study report as CSV.")
    report.add_argument("input", help="JSON report written by `study`.")
    return parser


def _study_values(args: argparse.Namespace) -> Dict[str, Any]:
    values = parse_config_file(args.config) if args.config else {}
    for key in _FIELDS:
        value = getattr(args, key, None)
        if value is not None:
            values[key] = value
    return values


def _emit(report, cfg: StudyConfig):
    if cfg.out:
        emit_report(report, cfg.format, cfg.out)
        logger.info(f"wrote {cfg.format} report to {cfg.out}")


def _run_solve(cfg: StudyConfig) -> int:
    problem = manufactured_problem(get_kernel(cfg.kernel), get_solution(cfg.solution))
    method = cfg.methods[0]
    status = 0
    with config.patch({"quadrature.order": cfg.quad_order}):
        for n in cfg.n_list:
            grid = make_grid(make_mesh(n), cfg.r, cfg.offsets)
            try:
                result = solve(problem, grid, method)
            except SolverFailure as exc:
                print(f"{method} n={n}: failed: {exc}")
                status = 1
                continue
            error = sup_norm(result.solution - problem.exact_solution, grid)
            print(f"{method} n={n}: sup error {error:.6e}")
    return status


def _run_study(cfg: StudyConfig) -> int:
    report = run_study(cfg)
    for name, summary in report.summaries.items():
        order = "floor" if summary.tail_eoc is None else f"{summary.tail_eoc:.3f}"
        print(f"{name}: order {order} (target {summary.target_order}) {'PASS' if summary.passed else 'FAIL'}")
    _emit(report, cfg)
    return 0 if report.passed else 1


def _run_probes(cfg: StudyConfig) -> int:
    report = run_scaling_probes(cfg)
    for s in report.series:
        slope = "floor" if s.slope is None else f"{s.slope:.3f}"
        print(f"{s.name}: slope {slope} (target {s.target}) {'PASS' if s.passed else 'FAIL'}")
    ratios = ", ".join(f"{v:.3f}" for v in report.operator_decay["ratios"])
    print(f"operator_decay: ratios {ratios} {'PASS' if report.operator_decay['passed'] else 'FAIL'}")
    _emit(report, cfg)
    return 0 if report.passed else 1


def _run_counterexample(cfg: StudyConfig, n_list) -> int:
    report = run_counterexample(n_list)
    for row in report.rows:
        print(
            f"n={row.n}: ||(I-P_n)phi|| {row.residual_norm:.12f}, ||K(I-P_n)phi|| {row.residual_norm_K:.12f}, "
            f"ratio {row.ratio:.6f}, iterated/collocation {row.iterated_ratio:.6f} {'PASS' if row.passed else 'FAIL'}"
        )
    _emit(report, cfg)
    return 0 if report.passed else 1


def _run_report(cfg: StudyConfig, path: str) -> int:
    report = load_report(path)
    if cfg.out:
        emit_report(report, "csv", cfg.out)
    else:
        print(",".join(report.CSV_COLUMNS))
        for row in report.csv_rows():
            print(",".join("" if v is None else str(v) for v in row))
    return 0 if report.passed else 1


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format=LOG_FORMAT)
    try:
        values = _study_values(args)
        cfg = StudyConfig(**values)
    except (OSError, ValueError) as exc:
        logger.error(str(exc))
        return 2
    patch = {} if args.num_workers is None else {"study.num_workers": args.num_workers}
    with config.patch(patch):
        if args.command == "solve":
            return _run_solve(cfg)
        if args.command == "study":
            return _run_study(cfg)
        if args.command == "probes":
            return _run_probes(cfg)
        if args.command == "counterexample":
            n_list = cfg.n_list if "n_list" in values else args.counter_n_list
            return _run_counterexample(cfg, n_list)
        return _run_report(cfg, args.input)


if __name__ == "__main__":
    sys.exit(main())
