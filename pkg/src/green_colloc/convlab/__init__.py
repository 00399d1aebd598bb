from .counterexample import run_counterexample
from .probes import run_scaling_probes
from .problems import catalog_solutions, get_solution, manufactured_problem
from .report import emit_report, load_report
from .study import ConvergenceReport, run_study, StudyConfig

__all__ = [
    "run_counterexample",
    "run_scaling_probes",
    "catalog_solutions",
    "get_solution",
    "manufactured_problem",
    "emit_report",
    "load_report",
    "ConvergenceReport",
    "run_study",
    "StudyConfig",
]
