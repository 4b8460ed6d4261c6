from __future__ import annotations

from typing import Any, Optional


class ConfigError(Exception):
    """Raised for invalid or conflicting configuration options."""

    def __init__(self, message: str, *, path: Optional[str] = None, line: Optional[int] = None):
        self.path = path
        self.line = line
        where = ""
        if path:
            where = f"{path}:{line}: " if line else f"{path}: "
        elif line:
            where = f"line {line}: "
        super().__init__(f"{where}{message}")


# --- expressions ---


class ExprError(Exception):
    """Base class for expression parsing errors."""


class ExprSyntaxError(ExprError):
    def __init__(self, message: str, position: int):
        self.position = position
        super().__init__(f"{message} at position {position}")


class UnknownIdentifier(ExprError):
    def __init__(self, name: str, position: int):
        self.name = name
        self.position = position
        super().__init__(f"unknown identifier '{name}' at position {position}")


class DisallowedVariable(ExprError):
    def __init__(self, name: str, allowed: frozenset, position: int):
        self.name = name
        self.allowed = allowed
        self.position = position
        names = ", ".join(sorted(allowed)) or "none"
        super().__init__(
            f"variable '{name}' at position {position} is not allowed here (allowed: {names})"
        )


class ExprDomainError(ArithmeticError):
    """Evaluation left the real domain (division by zero, log<=0, sqrt<0, overflow)."""

    def __init__(
        self, op: str, point: Optional[dict] = None, detail: str = "", overflow: bool = False
    ):
        self.op = op
        self.overflow = overflow
        self.point = dict(point or {})
        msg = f"domain error in '{op}'"
        if detail:
            msg += f": {detail}"
        if self.point:
            coords = ", ".join(f"{k}={v!r}" for k, v in sorted(self.point.items()))
            msg += f" at ({coords})"
        super().__init__(msg)


# --- problem ---


class ProblemError(Exception):
    """Base class for problem validation errors."""

    report: Any = None


class InvalidBoundaryRow(ProblemError):
    pass


class InvalidRowSplit(ProblemError):
    pass


class RankDeficient(ProblemError):
    pass


class DelayOutOfRange(ProblemError):
    def __init__(self, t: float, phi_t: float, a: float):
        self.t = t
        self.phi_t = phi_t
        super().__init__(f"delay maps t={t!r} to phi(t)={phi_t!r}, outside [0, {a!r}]")


# --- green / quadrature ---


class GreenError(Exception):
    def __init__(self, message: str, condition: float = float("inf")):
        self.condition = condition
        super().__init__(message)


class SingularGreenSystem(GreenError):
    """The homogeneous problem has nontrivial solutions; no Green function exists."""


class SingularGSystem(GreenError):
    """No unique boundary polynomial for the inhomogeneous rows."""


class GridError(ValueError):
    pass


# --- numerics ---


class NumericalFailure(Exception):
    pass


class DivergenceError(NumericalFailure):
    def __init__(self, message: str, report: Any = None):
        self.report = report
        super().__init__(message)


class MaxIterExceeded(NumericalFailure):
    """Iteration budget exhausted; the solver reports this without raising."""
