"""Re-run the bundled problems and compare against the bundled expectations."""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

from greenfde.config.loader import load_yaml
from greenfde.core.analysis import StudyReport, convergence_study
from greenfde.core.exceptions import (
    ConfigError,
    ExprDomainError,
    GreenError,
    NumericalFailure,
    ProblemError,
)
from greenfde.core.models import load_problem_config
from greenfde.core.progress import NoOpProgressReporter
from greenfde.core.quadrature import make_grid
from greenfde.core.reports import (
    csv_text,
    fmt6,
    solution_csv,
    study_csv,
    to_json,
    write_text,
)
from greenfde.core.solver import solve
from greenfde.interfaces import ProgressReporter

_log = logging.getLogger(__name__)

PROBLEMS_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "problems")
EXPECTED_FILE = os.path.join(PROBLEMS_DIR, "expected.yml")
SUMMARY_HEADER = ("name", "N", "K", "expected_K", "error", "expected_error", "status")


@dataclass
class Expectation:
    name: str
    config: str
    grids: List[int]
    K: Optional[int] = None
    errors: Dict[int, float] = field(default_factory=dict)
    factor: float = 2.0
    solution: bool = False


@dataclass
class Outcome:
    expectation: Expectation
    study: Optional[StudyReport] = None
    mismatches: List[str] = field(default_factory=list)
    error: Optional[str] = None

    @property
    def passed(self) -> bool:
        return self.error is None and not self.mismatches

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.expectation.name,
            "passed": self.passed,
            "error": self.error,
            "mismatches": list(self.mismatches),
            "study": self.study.to_dict() if self.study is not None else None,
        }


def load_expectations(path: str = EXPECTED_FILE) -> List[Expectation]:
    data = load_yaml(path)
    if data is None:
        raise ConfigError("expectations file not found", path=path)
    base = os.path.dirname(os.path.abspath(path))
    out: List[Expectation] = []
    for name, entry in data.items():
        if not isinstance(entry, dict) or "config" not in entry or "grids" not in entry:
            raise ConfigError(f"expectation '{name}' needs 'config' and 'grids'", path=path)
        try:
            out.append(
                Expectation(
                    name=str(name),
                    config=os.path.join(base, str(entry["config"])),
                    grids=[int(n) for n in entry["grids"]],
                    K=int(entry["K"]) if entry.get("K") is not None else None,
                    errors={int(n): float(e) for n, e in (entry.get("errors") or {}).items()},
                    factor=float(entry.get("factor", 2.0)),
                    solution=bool(entry.get("solution", False)),
                )
            )
        except (TypeError, ValueError) as e:
            raise ConfigError(f"expectation '{name}': {e}", path=path) from e
    return out


def compare(exp: Expectation, study: StudyReport) -> List[str]:
    """Mismatch messages; an empty list means the study reproduces the expectation."""
    problems: List[str] = []
    for row in study.rows:
        if not row.converged:
            problems.append(f"N={row.n}: did not converge ({row.failure or 'no convergence'})")
            continue
        if exp.K is not None and row.K != exp.K:
            problems.append(f"N={row.n}: K={row.K}, expected {exp.K}")
        want = exp.errors.get(row.n)
        if want is not None:
            got = row.error
            if got is None or not (want / exp.factor <= got <= want * exp.factor):
                problems.append(
                    f"N={row.n}: error {fmt6(got)} not within factor {exp.factor:g} of {want:.6g}"
                )
    return problems


def _summary_rows(outcomes: List[Outcome]):
    for out in outcomes:
        exp = out.expectation
        if out.study is None:
            yield (exp.name, "", "", "" if exp.K is None else exp.K, "", "", "error")
            continue
        for row in out.study.rows:
            ok = not any(m.startswith(f"N={row.n}:") for m in out.mismatches)
            yield (
                exp.name,
                row.n,
                "" if row.K is None else row.K,
                "" if exp.K is None else exp.K,
                fmt6(row.error),
                fmt6(exp.errors.get(row.n)),
                "ok" if ok else "mismatch",
            )


def reproduce(
    out_dir: str,
    expectations: Optional[List[Expectation]] = None,
    *,
    progress: Optional[ProgressReporter] = None,
) -> List[Outcome]:
    """Run every expectation's study, write per-problem files and a summary into out_dir."""
    expectations = expectations if expectations is not None else load_expectations()
    progress = progress or NoOpProgressReporter()
    os.makedirs(out_dir, exist_ok=True)
    outcomes: List[Outcome] = []

    for exp in expectations:
        outcome = Outcome(expectation=exp)
        outcomes.append(outcome)
        try:
            cfg = load_problem_config(exp.config)
            study = convergence_study(cfg.spec, exp.grids, cfg.tol, cfg.max_iter, progress=progress)
        except (ConfigError, ProblemError, GreenError) as e:
            outcome.error = str(e)
            _log.error("%s: %s", exp.name, e)
            continue
        outcome.study = study
        outcome.mismatches = compare(exp, study)
        write_text(os.path.join(out_dir, f"{exp.name}_study.csv"), study_csv(study))
        write_text(os.path.join(out_dir, f"{exp.name}_report.json"), to_json(study.to_dict()))

        if exp.solution:
            report = study.solutions.get(cfg.n)
            if report is None:
                try:
                    report = solve(cfg.spec, make_grid(cfg.spec.a, cfg.n), cfg.tol, cfg.max_iter)
                except (NumericalFailure, ExprDomainError) as e:
                    outcome.mismatches.append(f"N={cfg.n}: solution run failed: {e}")
            if report is not None:
                write_text(os.path.join(out_dir, f"{exp.name}_solution.csv"), solution_csv(report))

        for m in outcome.mismatches:
            _log.warning("%s: %s", exp.name, m)

    summary = csv_text(SUMMARY_HEADER, _summary_rows(outcomes))
    write_text(os.path.join(out_dir, "summary.csv"), summary)
    write_text(os.path.join(out_dir, "summary.json"), to_json([o.to_dict() for o in outcomes]))
    return outcomes
