"""CSV and JSON renderings of solver, study and condition reports.

Formatting is fixed (``.6g`` in tables, ``.17g`` in solution dumps, sorted JSON
keys) so that repeated runs produce identical files.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from typing import Any, Iterable, List, Optional, Sequence

import numpy as np

from greenfde.core.analysis import StudyReport
from greenfde.core.solver import SolveReport

STUDY_HEADER = ("N", "h2", "K", "error", "order")


def fmt6(x: Optional[float]) -> str:
    return "" if x is None else f"{x:.6g}"


def fmt17(x: float) -> str:
    return f"{x:.17g}"


def csv_text(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def study_csv(study: StudyReport) -> str:
    rows = (
        (r.n, fmt6(r.h2), "" if r.K is None else r.K, fmt6(r.error), fmt6(r.order))
        for r in study.rows
    )
    return csv_text(STUDY_HEADER, rows)


def solution_csv(report: SolveReport) -> str:
    header: List[str] = ["t", "U"]
    columns = [report.nodes, report.U]
    if report.exact_values is not None:
        header += ["exact", "abs_diff"]
        columns += [report.exact_values, np.abs(report.U - report.exact_values)]
    rows = (tuple(fmt17(float(c[i])) for c in columns) for i in range(report.nodes.shape[0]))
    return csv_text(header, rows)


def kernel_csv(points: np.ndarray, nodes: np.ndarray, matrix: np.ndarray) -> str:
    """One row per evaluation point t (or xi): t, G(t, s_0), ..., G(t, s_N)."""
    header = ["t"] + [f"s={fmt17(float(s))}" for s in nodes]
    rows = (
        [fmt17(float(t))] + [fmt17(float(g)) for g in matrix[i]] for i, t in enumerate(points)
    )
    return csv_text(header, rows)


def _clean(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def to_json(obj: Any) -> str:
    """Strict JSON (non-finite numbers become null), two-space indent, sorted keys."""
    return json.dumps(_clean(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_text(path: str, text: str) -> None:
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(text)
