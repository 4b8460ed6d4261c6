from __future__ import annotations

import sys
from typing import List, Optional

import click
from rich.console import Console
from rich.table import Table

from greenfde.core.analysis import ConditionReport, StudyReport
from greenfde.core.reports import fmt6
from greenfde.core.reproduce import Outcome
from greenfde.core.solver import SolveReport


def stderr_is_tty() -> bool:
    """True when the live progress display has a terminal to draw on."""
    try:
        iostream = click.get_text_stream("stderr")
    except Exception:
        iostream = sys.stderr
    return bool(getattr(iostream, "isatty", lambda: False)())


def _console(console: Optional[Console]) -> Console:
    return console or Console(soft_wrap=True)


def print_solve_summary(report: SolveReport) -> None:
    parts = [
        f"{report.name or 'problem'}:",
        f"N={report.n}",
        f"K={report.K}",
        f"converged={'yes' if report.converged else 'no'}",
        f"residual={report.final_residual:.3e}",
    ]
    if report.error_vs_exact is not None:
        parts.append(f"error={report.error_vs_exact:.4e}")
    if report.hypotheses is not None:
        parts.append(f"hypotheses={'pass' if report.hypotheses else 'fail'}")
    click.echo(" ".join(parts))


def print_condition_report(report: ConditionReport, console: Optional[Console] = None) -> None:
    table = Table(title="Existence and uniqueness check", show_header=True)
    table.add_column("quantity")
    table.add_column("value", justify="right")
    rows = [
        ("||g||", report.g_norm),
        ("M0", report.M0),
        ("M", report.M),
        ("R = ||g|| + M0*M", report.R),
        ("max |f| observed", report.f_max_observed),
        ("L1 (estimate)", report.L1),
        ("L2 (estimate)", report.L2),
        ("q = (L1 + L2)*M0", report.q),
    ]
    for label, value in rows:
        table.add_row(label, f"{value:.6g}")
    table.add_row("samples per axis", str(report.samples_per_axis))
    table.add_row("result", "pass" if report.passed else "FAIL")
    _console(console).print(table)


def print_study(study: StudyReport, console: Optional[Console] = None) -> None:
    table = Table(title=f"Convergence: {study.name or 'problem'} (error vs {study.reference})")
    for col in ("N", "h2", "K", "error", "order"):
        table.add_column(col, justify="right")
    show_bound = any(r.bound is not None for r in study.rows)
    if show_bound:
        table.add_column("bound", justify="right")
    table.add_column("status")
    for r in study.rows:
        k = "" if r.K is None else str(r.K)
        cells = [str(r.n), fmt6(r.h2), k, fmt6(r.error), fmt6(r.order)]
        if show_bound:
            cells.append(fmt6(r.bound))
        cells.append("ok" if r.converged else (r.failure or "not converged"))
        table.add_row(*cells)
    _console(console).print(table)


def print_reproduce_summary(outcomes: List[Outcome], console: Optional[Console] = None) -> None:
    table = Table(title="Reproduction summary")
    table.add_column("problem")
    table.add_column("grids", justify="right")
    table.add_column("K", justify="right")
    table.add_column("status")
    for out in outcomes:
        exp = out.expectation
        ks = sorted({r.K for r in out.study.rows if r.K is not None}) if out.study else []
        status = "ok" if out.passed else (out.error or f"{len(out.mismatches)} mismatch(es)")
        table.add_row(
            exp.name,
            ",".join(str(n) for n in exp.grids),
            ",".join(str(k) for k in ks) + (f" (expected {exp.K})" if exp.K is not None else ""),
            status,
        )
    console = _console(console)
    console.print(table)
    for out in outcomes:
        for m in out.mismatches:
            console.print(f"{out.expectation.name}: {m}", markup=False)
