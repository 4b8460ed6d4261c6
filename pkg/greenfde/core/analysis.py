"""Existence/uniqueness hypothesis checks and grid-refinement studies."""

from __future__ import annotations

import functools
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Tuple

import numpy as np

from greenfde.core.exceptions import ExprDomainError, GreenError, NumericalFailure, ProblemError
from greenfde.core.expr import evaluate_many
from greenfde.core.green import GreenTable, build_g, compute_m0
from greenfde.core.problem import ProblemSpec
from greenfde.core.progress import NoOpProgressReporter
from greenfde.core.quadrature import make_grid
from greenfde.core.solver import DEFAULT_MAX_ITER, DEFAULT_TOL, SolveReport, solve
from greenfde.interfaces import ProgressReporter

_log = logging.getLogger(__name__)

DEFAULT_SAMPLES = 64
MIN_SAMPLES = 8
M0_GRID_N = 1000


@dataclass(frozen=True)
class ConditionReport:
    g_norm: float
    M0: float
    M: float
    R: float
    f_max_observed: float
    f_argmax: Tuple[float, float, float]
    L1: float
    L2: float
    q: float
    bound_estimate: float
    samples_per_axis: int
    passed: bool

    def to_dict(self) -> Dict[str, Any]:
        return {
            "g_norm": self.g_norm,
            "M0": self.M0,
            "M": self.M,
            "R": self.R,
            "f_max_observed": self.f_max_observed,
            "f_argmax": list(self.f_argmax),
            "L1": self.L1,
            "L2": self.L2,
            "q": self.q,
            "bound_estimate": self.bound_estimate,
            "samples_per_axis": self.samples_per_axis,
            "pass": self.passed,
        }


def check_conditions(
    spec: ProblemSpec,
    M: float,
    samples_per_axis: int = DEFAULT_SAMPLES,
    *,
    table: Optional[GreenTable] = None,
    m0_grid_n: int = M0_GRID_N,
) -> ConditionReport:
    """Sample f over D_M = [0,a] x [-R,R]^2 with R = ||g|| + M0*M.

    L1 and L2 are lattice maxima of central differences in u and v; they are
    estimates (lower bounds on the true suprema), not certified constants.
    """
    if not (M > 0.0 and math.isfinite(M)):
        raise ValueError(f"M must be positive, got {M!r}")
    if int(samples_per_axis) < MIN_SAMPLES:
        raise ValueError(f"samples_per_axis must be >= {MIN_SAMPLES}, got {samples_per_axis!r}")
    samples = int(samples_per_axis)
    table = table if table is not None else GreenTable(spec)

    g_norm = build_g(spec).norm(spec.a)
    m0 = compute_m0(table, make_grid(spec.a, m0_grid_n))
    R = g_norm + m0 * M
    _log.info("Sampling f on %d^3 points, R=%.6g", samples, R)

    ts = np.linspace(0.0, spec.a, samples)
    box = np.linspace(-R, R, samples)
    T, U, V = np.meshgrid(ts, box, box, indexing="ij")
    F = np.abs(evaluate_many(spec.f, T, U, V))
    i_max = np.unravel_index(int(np.argmax(F)), F.shape)
    f_max = float(F[i_max])

    delta = 1e-6 * max(1.0, R)
    dfu = (evaluate_many(spec.f, T, U + delta, V) - evaluate_many(spec.f, T, U - delta, V)) / (
        2.0 * delta
    )
    dfv = (evaluate_many(spec.f, T, U, V + delta) - evaluate_many(spec.f, T, U, V - delta)) / (
        2.0 * delta
    )
    L1 = float(np.max(np.abs(dfu)))
    L2 = float(np.max(np.abs(dfv)))
    q = (L1 + L2) * m0

    return ConditionReport(
        g_norm=g_norm,
        M0=m0,
        M=float(M),
        R=R,
        f_max_observed=f_max,
        f_argmax=(float(T[i_max]), float(U[i_max]), float(V[i_max])),
        L1=L1,
        L2=L2,
        q=q,
        bound_estimate=R,
        samples_per_axis=samples,
        passed=bool(f_max <= M and q < 1.0),
    )


@dataclass
class StudyRow:
    n: int
    h2: float
    K: Optional[int] = None
    error: Optional[float] = None
    converged: bool = False
    order: Optional[float] = None
    residual: Optional[float] = None
    d: Optional[float] = None
    p_k: Optional[float] = None
    bound: Optional[float] = None
    failure: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "N": self.n,
            "h2": self.h2,
            "K": self.K,
            "error": self.error,
            "converged": self.converged,
            "order": self.order,
            "residual": self.residual,
            "d": self.d,
            "p_k": self.p_k,
            "bound": self.bound,
            "failure": self.failure,
        }


@dataclass
class StudyReport:
    name: str
    rows: List[StudyRow]
    reference: str  # "exact" or "finest"
    q: Optional[float] = None
    M0: Optional[float] = None
    solutions: Dict[int, SolveReport] = field(default_factory=dict, repr=False)

    @property
    def all_converged(self) -> bool:
        return all(r.converged for r in self.rows)

    def row(self, n: int) -> StudyRow:
        for r in self.rows:
            if r.n == n:
                return r
        raise KeyError(n)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "reference": self.reference,
            "q": self.q,
            "M0": self.M0,
            "rows": [r.to_dict() for r in self.rows],
        }


def observed_order(n1: int, e1: float, n2: int, e2: float) -> Optional[float]:
    """log(e1/e2) / log(n2/n1); log2(e(N)/e(2N)) for a doubling."""
    if not (e1 > 0.0 and e2 > 0.0) or n1 == n2:
        return None
    return math.log(e1 / e2) / math.log(n2 / n1)


def convergence_study(
    spec: ProblemSpec,
    Ns: Iterable[int],
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    *,
    q: Optional[float] = None,
    m0: Optional[float] = None,
    progress: Optional[ProgressReporter] = None,
) -> StudyReport:
    """Solve on every N and tabulate (N, h^2, K, error, order).

    Without an exact solution, errors are measured against the finest converged
    grid by restriction (only for N dividing the finest N). A failing grid is
    recorded in its row and does not stop the study.
    """
    ns = sorted({int(n) for n in Ns})
    if not ns:
        raise ValueError("at least one grid size is required")
    progress = progress or NoOpProgressReporter()
    table = GreenTable(spec)
    rows: List[StudyRow] = []
    solutions: Dict[int, SolveReport] = {}

    for n in ns:
        task = progress.add_task(f"{spec.name or 'problem'}: N={n}")
        grid = make_grid(spec.a, n)
        row = StudyRow(n=n, h2=grid.h**2)
        try:
            on_step = functools.partial(progress.record_step, task)
            rep = solve(spec, grid, tol, max_iter, table=table, on_step=on_step)
        except (NumericalFailure, ExprDomainError, ProblemError, GreenError) as e:
            _log.warning("N=%d failed: %s", n, e)
            row.failure = f"{type(e).__name__}: {e}"
            partial = getattr(e, "report", None)
            if isinstance(partial, SolveReport):
                row.K = partial.K
        else:
            solutions[n] = rep
            row.K = rep.K
            row.converged = rep.converged
            row.residual = rep.final_residual
            row.d = rep.d
            row.error = rep.error_vs_exact
            if not rep.converged and rep.failure is not None:
                row.failure = str(rep.failure)
            if q is not None and 0.0 <= q < 1.0:
                row.p_k = q**rep.K / (1.0 - q)
                if m0 is not None:
                    row.bound = rep.a_posteriori_bound(q, m0)
        rows.append(row)
        progress.complete_task(task, f"K={row.K}" if row.converged else "failed")

    reference = "exact"
    if spec.exact is None:
        reference = "finest"
        converged = [n for n in ns if n in solutions and solutions[n].converged]
        if converged:
            fine_n = converged[-1]
            fine = solutions[fine_n].U
            for row in rows:
                if row.n == fine_n or row.n not in solutions or fine_n % row.n != 0:
                    continue
                restricted = fine[:: fine_n // row.n]
                row.error = float(np.max(np.abs(solutions[row.n].U - restricted)))

    for cur, nxt in zip(rows, rows[1:]):
        if cur.converged and nxt.converged and cur.error is not None and nxt.error is not None:
            cur.order = observed_order(cur.n, cur.error, nxt.n, nxt.error)

    return StudyReport(
        name=spec.name, rows=rows, reference=reference, q=q, M0=m0, solutions=solutions
    )
