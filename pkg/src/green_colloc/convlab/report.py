import csv
import json
import math
import os
from typing import Any, Dict, Union

from green_colloc.convlab.counterexample import CounterexampleReport
from green_colloc.convlab.probes import ProbeReport
from green_colloc.convlab.study import ConvergenceReport

__all__ = [
    "emit_report",
    "load_report",
    "make_json_safe",
]

Report = Union[ConvergenceReport, ProbeReport, CounterexampleReport]


def make_json_safe(obj: Any) -> Any:
    """Plain JSON types only; non-finite floats become null."""
    if isinstance(obj, dict):
        return {str(k): make_json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [make_json_safe(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def _csv_value(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return "" if not math.isfinite(value) else repr(value)
    return str(value)


def emit_report(report: Report, format: str, path: Union[str, os.PathLike]) -> str:
    """Writes the report as CSV (one row per entry) or JSON (the whole report); returns the path."""
    path = os.fspath(path)
    if format == "json":
        payload = make_json_safe(report.to_dict())
        with open(path, "w", encoding="utf-8") as f:
            json.dump(payload, f, indent=2, sort_keys=True)
            f.write("\n")
    elif format == "csv":
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow(report.CSV_COLUMNS)
            for row in report.csv_rows():
                writer.writerow([_csv_value(v) for v in row])
    else:
        raise ValueError(f"Unsupported format: {format!r}, expected csv or json")
    return path


def load_report(path: Union[str, os.PathLike]) -> ConvergenceReport:
    """Reads a study report written by emit_report in JSON format."""
    with open(os.fspath(path), encoding="utf-8") as f:
        payload: Dict[str, Any] = json.load(f)
    if payload.get("kind") != "study":
        raise ValueError(f"Unsupported report: expected a study report, but got kind {payload.get('kind')!r}")
    return ConvergenceReport.from_dict(payload)
