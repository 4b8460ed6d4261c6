from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from greenfde.core.exceptions import (
    DelayOutOfRange,
    GridError,
    InvalidBoundaryRow,
    InvalidRowSplit,
    ProblemError,
    RankDeficient,
)
from greenfde.core.expr import F_VARS, T_VARS, Expr, evaluate_many, parse, variables
from greenfde.core.quadrature import Grid

_log = logging.getLogger(__name__)

ENDPOINTS = ("left", "right")
PHI_SAMPLES = 10_001
CLAMP_TOL = 1e-12
RANK_TOL = 1e-10


@dataclass(frozen=True)
class BoundaryRow:
    """alpha*u(x) + beta*u'(x) + gamma*u''(x) = b at x = 0 (left) or x = a (right)."""

    endpoint: str
    alpha: float
    beta: float
    gamma: float
    b: float = 0.0

    def __post_init__(self) -> None:
        if self.endpoint not in ENDPOINTS:
            raise InvalidBoundaryRow(f"endpoint must be 'left' or 'right', got {self.endpoint!r}")
        for name in ("alpha", "beta", "gamma", "b"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise InvalidBoundaryRow(f"{name} must be finite, got {value!r}")
            object.__setattr__(self, name, value)
        if self.alpha == 0.0 and self.beta == 0.0 and self.gamma == 0.0:
            raise InvalidBoundaryRow("boundary row has all coefficients zero")

    def at(self, a: float) -> float:
        return 0.0 if self.endpoint == "left" else a

    def functional(self, a: float) -> np.ndarray:
        """Row vector r with r @ (c0, c1, c2) = B[c0 + c1*t + c2*t^2]."""
        x = self.at(a)
        return np.array(
            [
                self.alpha,
                self.alpha * x + self.beta,
                self.alpha * x * x + 2.0 * self.beta * x + 2.0 * self.gamma,
            ]
        )

    def apply(self, value: float, d1: float, d2: float) -> float:
        return self.alpha * value + self.beta * d1 + self.gamma * d2


@dataclass(frozen=True)
class ProblemSpec:
    a: float
    rows: Tuple[BoundaryRow, ...]
    f: Expr
    phi: Expr
    exact: Optional[Expr] = None
    name: str = field(default="", compare=False)

    def __post_init__(self) -> None:
        a = float(self.a)
        if not math.isfinite(a) or a <= 0.0:
            raise ProblemError(f"interval length a must be positive, got {self.a!r}")
        object.__setattr__(self, "a", a)
        rows = tuple(self.rows)
        if len(rows) != 3:
            raise InvalidRowSplit(f"exactly 3 boundary rows are required, got {len(rows)}")
        object.__setattr__(self, "rows", rows)
        for label, e, allowed in (
            ("f", self.f, F_VARS),
            ("phi", self.phi, T_VARS),
            ("exact", self.exact, T_VARS),
        ):
            if e is None:
                continue
            extra = variables(e) - allowed
            if extra:
                raise ProblemError(f"{label} uses variables not allowed: {sorted(extra)}")

    @classmethod
    def from_sources(
        cls,
        a: float,
        rows: Sequence[BoundaryRow],
        f: str,
        phi: str = "t",
        exact: Optional[str] = None,
        name: str = "",
    ) -> "ProblemSpec":
        return cls(
            a=a,
            rows=tuple(rows),
            f=parse(f, F_VARS),
            phi=parse(phi, T_VARS),
            exact=parse(exact, T_VARS) if exact is not None else None,
            name=name,
        )

    @property
    def left_rows(self) -> Tuple[BoundaryRow, ...]:
        return tuple(r for r in self.rows if r.endpoint == "left")

    @property
    def right_rows(self) -> Tuple[BoundaryRow, ...]:
        return tuple(r for r in self.rows if r.endpoint == "right")


@dataclass(frozen=True)
class ValidationReport:
    rank: int
    form: Optional[str]  # "two-left" or "two-right"
    phi_min: float
    phi_max: float
    phi_argmin: float
    phi_argmax: float
    passed: bool
    errors: Tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "rank": self.rank,
            "form": self.form,
            "phi_min": self.phi_min,
            "phi_max": self.phi_max,
            "phi_argmin": self.phi_argmin,
            "phi_argmax": self.phi_argmax,
            "passed": self.passed,
            "errors": list(self.errors),
        }


def coefficient_matrix(spec: ProblemSpec) -> np.ndarray:
    """3x6 matrix: left-endpoint (alpha, beta, gamma) in columns 1-3, right in 4-6."""
    m = np.zeros((3, 6))
    for i, row in enumerate(spec.rows):
        offset = 0 if row.endpoint == "left" else 3
        m[i, offset : offset + 3] = (row.alpha, row.beta, row.gamma)
    return m


def boundary_rank(spec: ProblemSpec) -> int:
    sv = np.linalg.svd(coefficient_matrix(spec), compute_uv=False)
    if sv[0] == 0.0:
        return 0
    return int(np.sum(sv > RANK_TOL * sv[0]))


def validate(spec: ProblemSpec) -> ValidationReport:
    """Check the row split, the rank condition and that phi maps [0, a] into itself.

    Returns the report when everything passes; otherwise raises the first failure
    (InvalidRowSplit, RankDeficient, DelayOutOfRange) with ``.report`` attached.
    """
    n_left = len(spec.left_rows)
    form = {2: "two-left", 1: "two-right"}.get(n_left)
    rank = boundary_rank(spec)

    ts = np.linspace(0.0, spec.a, PHI_SAMPLES)
    ph = evaluate_many(spec.phi, ts)
    lo, hi = -CLAMP_TOL * spec.a, spec.a * (1.0 + CLAMP_TOL)
    outside = (ph < lo) | (ph > hi)

    errors = []
    failure: Optional[ProblemError] = None
    if form is None:
        failure = InvalidRowSplit(
            f"rows must be two at the left and one at the right endpoint or vice versa; "
            f"got {n_left} left and {3 - n_left} right"
        )
        errors.append(str(failure))
    if rank < 3:
        err = RankDeficient(f"boundary coefficient matrix has rank {rank}, expected 3")
        errors.append(str(err))
        failure = failure or err
    if np.any(outside):
        i = int(np.argmax(outside))
        err = DelayOutOfRange(float(ts[i]), float(ph[i]), spec.a)
        errors.append(str(err))
        failure = failure or err

    report = ValidationReport(
        rank=rank,
        form=form,
        phi_min=float(ph.min()),
        phi_max=float(ph.max()),
        phi_argmin=float(ts[int(np.argmin(ph))]),
        phi_argmax=float(ts[int(np.argmax(ph))]),
        passed=failure is None,
        errors=tuple(errors),
    )
    if failure is not None:
        failure.report = report
        raise failure
    _log.debug(
        "Problem %s valid: form=%s phi range [%g, %g]",
        spec.name or "(unnamed)",
        form,
        report.phi_min,
        report.phi_max,
    )
    return report


def delay_points(spec: ProblemSpec, grid: Grid) -> np.ndarray:
    """xi_i = phi(t_i), clamped into [0, a] when outside by round-off only."""
    if not math.isclose(grid.a, spec.a, rel_tol=1e-12):
        raise GridError(f"grid covers [0, {grid.a!r}] but the problem is posed on [0, {spec.a!r}]")
    xi = evaluate_many(spec.phi, grid.nodes)
    tol = CLAMP_TOL * spec.a
    outside = (xi < -tol) | (xi > spec.a + tol)
    if np.any(outside):
        i = int(np.argmax(outside))
        raise DelayOutOfRange(float(grid.nodes[i]), float(xi[i]), spec.a)
    return np.clip(xi, 0.0, spec.a)
