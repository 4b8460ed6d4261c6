"""Discrete fixed-point iteration on the trapezoid grid.

    Psi_0(t_i)     = f(t_i, 0, 0)
    U_k(t_i)       = g(t_i)  + h * sum_j rho_j G(t_i,  t_j) Psi_k(t_j)
    V_k(t_i)       = g(xi_i) + h * sum_j rho_j G(xi_i, t_j) Psi_k(t_j)
    Psi_{k+1}(t_i) = f(t_i, U_k(t_i), V_k(t_i))

until max_i |Psi_k - Psi_{k-1}| <= tol.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from greenfde.core.exceptions import DivergenceError, ExprDomainError, MaxIterExceeded
from greenfde.core.expr import evaluate_many
from greenfde.core.green import BoundaryPolynomial, GreenTable, build_g
from greenfde.core.problem import ProblemSpec, delay_points
from greenfde.core.quadrature import Grid
from greenfde.interfaces import StepCallback

_log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 1000
DIVERGENCE_LIMIT = 1e12


@dataclass(frozen=True, eq=False)
class IterationState:
    """Psi_k with the grid functions U_k, V_k it produces (None before the first step)."""

    k: int
    psi: np.ndarray
    u: Optional[np.ndarray] = None
    v: Optional[np.ndarray] = None
    residual: float = math.inf


@dataclass(eq=False)
class SolveReport:
    name: str
    n: int
    a: float
    tol: float
    max_iter: int
    K: int
    converged: bool
    final_residual: float
    nodes: np.ndarray = field(repr=False)
    U: np.ndarray = field(repr=False)
    V: np.ndarray = field(repr=False)
    psi: np.ndarray = field(repr=False)
    history: List[float] = field(default_factory=list)
    exact_values: Optional[np.ndarray] = field(default=None, repr=False)
    error_vs_exact: Optional[float] = None
    # None until check_conditions has run for this problem.
    hypotheses: Optional[bool] = None

    @property
    def d(self) -> Optional[float]:
        """max |Psi_1 - Psi_0|."""
        return self.history[0] if self.history else None

    def a_posteriori_bound(self, q: float, m0: float) -> Optional[float]:
        """M0 * q^K / (1 - q) * d, only meaningful for q < 1."""
        if not (0.0 <= q < 1.0) or self.d is None:
            return None
        return m0 * q**self.K / (1.0 - q) * self.d

    @property
    def failure(self) -> Optional[MaxIterExceeded]:
        if self.converged:
            return None
        return MaxIterExceeded(
            f"no convergence after {self.K} iterations "
            f"(residual {self.final_residual:.3e} > tol {self.tol:.1e})"
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "N": self.n,
            "a": self.a,
            "tol": self.tol,
            "max_iter": self.max_iter,
            "K": self.K,
            "converged": self.converged,
            "final_residual": self.final_residual,
            "error_vs_exact": self.error_vs_exact,
            "hypotheses": self.hypotheses,
            "history": list(self.history),
        }


def initialize(spec: ProblemSpec, grid: Grid) -> IterationState:
    return IterationState(k=0, psi=evaluate_many(spec.f, grid.nodes, 0.0, 0.0))


def _images(
    psi: np.ndarray, table: GreenTable, g: BoundaryPolynomial, grid: Grid, xi: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    kernels = table.grid_kernels(grid, xi)
    u = g(grid.nodes) + grid.integrate(kernels.nodes, psi)
    v = g(xi) + grid.integrate(kernels.delay, psi)
    return u, v


def step(
    state: IterationState,
    spec: ProblemSpec,
    table: GreenTable,
    g: BoundaryPolynomial,
    grid: Grid,
    xi: np.ndarray,
) -> IterationState:
    """One update Psi_k -> Psi_{k+1}; the returned state carries U, V of the new Psi."""
    if state.u is None or state.v is None:
        u, v = _images(state.psi, table, g, grid, xi)
    else:
        u, v = state.u, state.v
    try:
        psi = evaluate_many(spec.f, grid.nodes, u, v)
    except ExprDomainError as e:
        if e.overflow:
            raise DivergenceError(f"iteration {state.k + 1}: {e}") from e
        raise
    residual = float(np.max(np.abs(psi - state.psi)))
    u_next, v_next = _images(psi, table, g, grid, xi)
    if not (np.all(np.isfinite(u_next)) and np.all(np.isfinite(v_next))):
        raise DivergenceError(f"iteration {state.k + 1}: non-finite solution values")
    return IterationState(k=state.k + 1, psi=psi, u=u_next, v=v_next, residual=residual)


def solve(
    spec: ProblemSpec,
    grid: Grid,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    *,
    table: Optional[GreenTable] = None,
    divergence_limit: float = DIVERGENCE_LIMIT,
    on_step: Optional[StepCallback] = None,
) -> SolveReport:
    """Iterate until the successive-difference norm of Psi is <= tol.

    Running out of iterations is not an error: the report comes back with
    ``converged=False``. Divergence raises DivergenceError carrying the partial report.
    """
    if not (tol > 0.0):
        raise ValueError(f"tol must be positive, got {tol!r}")
    if int(max_iter) < 1:
        raise ValueError(f"max_iter must be >= 1, got {max_iter!r}")
    table = table if table is not None else GreenTable(spec)
    g = build_g(spec)
    xi = delay_points(spec, grid)

    state = initialize(spec, grid)
    history: List[float] = []
    while state.k < max_iter:
        try:
            state = step(state, spec, table, g, grid, xi)
        except DivergenceError as e:
            e.report = _report(spec, grid, tol, max_iter, state, history, False)
            raise
        history.append(state.residual)
        _log.debug(
            "N=%d k=%d residual=%.3e",
            grid.n,
            state.k,
            state.residual,
            extra={"problem": spec.name, "N": grid.n, "k": state.k, "residual": state.residual},
        )
        if on_step is not None:
            on_step(state.k, state.residual)
        size = float(np.max(np.abs(state.psi)))
        if size > divergence_limit:
            report = _report(spec, grid, tol, max_iter, state, history, False)
            raise DivergenceError(
                f"iteration {state.k}: |Psi| = {size:.3g} exceeds {divergence_limit:.3g}",
                report=report,
            )
        if state.residual <= tol:
            break

    converged = state.residual <= tol
    report = _report(spec, grid, tol, max_iter, state, history, converged)
    if not converged:
        _log.warning("%s", report.failure)
    _log.info(
        "N=%d converged=%s K=%d",
        grid.n,
        converged,
        report.K,
        extra={"problem": spec.name, "N": grid.n, "k": report.K},
    )
    return report


def _report(
    spec: ProblemSpec,
    grid: Grid,
    tol: float,
    max_iter: int,
    state: IterationState,
    history: List[float],
    converged: bool,
) -> SolveReport:
    nan = np.full(grid.size, np.nan)
    u = state.u if state.u is not None else nan
    v = state.v if state.v is not None else nan
    report = SolveReport(
        name=spec.name,
        n=grid.n,
        a=grid.a,
        tol=tol,
        max_iter=int(max_iter),
        K=state.k,
        converged=converged,
        final_residual=state.residual,
        nodes=grid.nodes,
        U=u,
        V=v,
        psi=state.psi,
        history=list(history),
    )
    if spec.exact is not None and state.u is not None:
        exact = evaluate_many(spec.exact, grid.nodes)
        report = replace(
            report,
            exact_values=exact,
            error_vs_exact=float(np.max(np.abs(state.u - exact))),
        )
    return report
