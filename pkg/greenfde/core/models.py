from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Any, Dict, List, Optional

from greenfde.config.loader import line_of, load_yaml, merge_dicts, source_of
from greenfde.core.analysis import DEFAULT_SAMPLES, MIN_SAMPLES
from greenfde.core.exceptions import (
    ConfigError,
    DelayOutOfRange,
    ExprDomainError,
    ExprError,
    ProblemError,
)
from greenfde.core.expr import F_VARS, NO_VARS, T_VARS, Expr, evaluate, parse, to_source
from greenfde.core.problem import ENDPOINTS, BoundaryRow, ProblemSpec, validate
from greenfde.core.solver import DEFAULT_MAX_ITER, DEFAULT_TOL

DEFAULT_N = 100
_TOP_KEYS = {"name", "interval", "bc", "f", "phi", "exact", "N", "tol", "max_iter", "M", "samples"}
_ROW_KEYS = {"at", "alpha", "beta", "gamma", "b"}


@dataclass
class ProblemConfig:
    spec: ProblemSpec
    n: int = DEFAULT_N
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER
    M: Optional[float] = None
    samples: int = DEFAULT_SAMPLES
    source: Optional[str] = None

    @property
    def name(self) -> str:
        return self.spec.name


def _fail(message: str, data: Any, key: Any = None, source: Optional[str] = None) -> ConfigError:
    return ConfigError(message, path=source_of(data) or source, line=line_of(data, key))


def _real(
    data: Dict[str, Any], key: str, source: Optional[str], *, what: Optional[str] = None
) -> float:
    """A finite real: a number, a numeric string, or an expression over constants only."""
    value = data[key]
    label = what or key
    if isinstance(value, bool):
        raise _fail(f"'{label}' must be a real number, got {value!r}", data, key, source)
    if isinstance(value, (int, float)):
        out = float(value)
    elif isinstance(value, str):
        try:
            out = evaluate(parse(value, NO_VARS))
        except (ExprError, ExprDomainError) as e:
            raise _fail(f"'{label}': {e}", data, key, source) from e
    else:
        raise _fail(
            f"'{label}' must be a real number, got {type(value).__name__}", data, key, source
        )
    if not math.isfinite(out):
        raise _fail(f"'{label}' must be finite, got {out!r}", data, key, source)
    return out


def _int(data: Dict[str, Any], key: str, source: Optional[str], minimum: int) -> int:
    value = data[key]
    if isinstance(value, str):
        try:
            value = int(value.strip())
        except ValueError:
            pass
    if isinstance(value, bool) or not isinstance(value, int):
        raise _fail(f"'{key}' must be an integer, got {value!r}", data, key, source)
    if value < minimum:
        raise _fail(f"'{key}' must be >= {minimum}, got {value}", data, key, source)
    return value


def _expr_text(data: Dict[str, Any], key: str, source: Optional[str]) -> str:
    value = data[key]
    if isinstance(value, bool) or not isinstance(value, (str, int, float)):
        raise _fail(f"'{key}' must be an expression string", data, key, source)
    return str(value)


def _rows(config: Dict[str, Any], source: Optional[str]) -> List[BoundaryRow]:
    rows_conf = config["bc"]
    if not isinstance(rows_conf, list):
        raise _fail("'bc' must be a list of 3 boundary rows", config, "bc", source)
    if len(rows_conf) != 3:
        raise _fail(f"'bc' must have exactly 3 rows, got {len(rows_conf)}", config, "bc", source)
    rows: List[BoundaryRow] = []
    for i, row in enumerate(rows_conf):
        if not isinstance(row, dict):
            raise _fail(f"bc[{i}] must be a mapping", config, "bc", source)
        unknown = set(row) - _ROW_KEYS
        if unknown:
            key = sorted(unknown, key=str)[0]
            raise _fail(f"bc[{i}]: unknown key '{key}'", row, key, source)
        if row.get("at") not in ENDPOINTS:
            raise _fail(
                f"bc[{i}].at must be 'left' or 'right', got {row.get('at')!r}", row, "at", source
            )
        coeffs = {}
        for name in ("alpha", "beta", "gamma", "b"):
            coeffs[name] = _real(row, name, source, what=f"bc[{i}].{name}") if name in row else 0.0
        try:
            rows.append(BoundaryRow(endpoint=row["at"], **coeffs))
        except ProblemError as e:
            raise _fail(f"bc[{i}]: {e}", row, None, source) from e
    return rows


def map_config_to_problem(
    config: Dict[str, Any], *, source: Optional[str] = None, name: Optional[str] = None
) -> ProblemConfig:
    """Build and validate a ProblemConfig from a loaded mapping."""
    if not isinstance(config, dict):
        raise ConfigError("problem config must be a mapping", path=source)
    unknown = set(config) - _TOP_KEYS
    if unknown:
        key = sorted(unknown, key=str)[0]
        raise _fail(f"unknown key '{key}'", config, key, source)
    for key in ("interval", "bc", "f"):
        if key not in config:
            raise _fail(f"missing required key '{key}'", config, None, source)

    interval = config["interval"]
    if not isinstance(interval, dict) or "a" not in interval:
        raise _fail("'interval' must be a mapping with key 'a'", config, "interval", source)
    a = _real(interval, "a", source, what="interval.a")
    rows = _rows(config, source)

    parsed: Dict[str, Optional[Expr]] = {"f": None, "phi": parse("t", T_VARS), "exact": None}
    for key, allowed in (("f", F_VARS), ("phi", T_VARS), ("exact", T_VARS)):
        if config.get(key) is None:
            continue
        try:
            parsed[key] = parse(_expr_text(config, key, source), allowed)
        except ExprError as e:
            raise _fail(f"'{key}': {e}", config, key, source) from e

    problem_name = str(config.get("name") or name or "")
    try:
        spec = ProblemSpec(a=a, rows=tuple(rows), name=problem_name, **parsed)
    except ProblemError as e:
        raise _fail(str(e), config, None, source) from e

    try:
        validate(spec)
    except ProblemError as e:
        key = "phi" if isinstance(e, DelayOutOfRange) else "bc"
        raise _fail(f"invalid problem: {e}", config, key, source) from e
    except ExprDomainError as e:
        raise _fail(f"'phi': {e}", config, "phi", source) from e

    out = ProblemConfig(spec=spec, source=source_of(config) or source)
    if config.get("N") is not None:
        out.n = _int(config, "N", source, 2)
    if config.get("tol") is not None:
        out.tol = _real(config, "tol", source)
        if out.tol <= 0.0:
            raise _fail(f"'tol' must be positive, got {out.tol!r}", config, "tol", source)
    if config.get("max_iter") is not None:
        out.max_iter = _int(config, "max_iter", source, 1)
    if config.get("M") is not None:
        out.M = _real(config, "M", source)
        if out.M <= 0.0:
            raise _fail(f"'M' must be positive, got {out.M!r}", config, "M", source)
    if config.get("samples") is not None:
        out.samples = _int(config, "samples", source, MIN_SAMPLES)
    return out


def load_problem_config(path: str, overrides: Optional[Dict[str, Any]] = None) -> ProblemConfig:
    """Load a YAML/JSON problem document, apply overrides, validate."""
    data = load_yaml(path)
    if data is None:
        raise ConfigError("config file not found", path=path)
    if overrides:
        data = merge_dicts(data, overrides)
    stem = os.path.splitext(os.path.basename(path))[0]
    return map_config_to_problem(data, source=path, name=stem)


def problem_to_dict(cfg: ProblemConfig) -> Dict[str, Any]:
    """Canonical document for a config; loading it back yields an equal ProblemSpec."""
    spec = cfg.spec
    doc: Dict[str, Any] = {
        "name": spec.name,
        "interval": {"a": spec.a},
        "bc": [
            {"at": r.endpoint, "alpha": r.alpha, "beta": r.beta, "gamma": r.gamma, "b": r.b}
            for r in spec.rows
        ],
        "f": to_source(spec.f),
        "phi": to_source(spec.phi),
        "N": cfg.n,
        "tol": cfg.tol,
        "max_iter": cfg.max_iter,
        "samples": cfg.samples,
    }
    if spec.exact is not None:
        doc["exact"] = to_source(spec.exact)
    if cfg.M is not None:
        doc["M"] = cfg.M
    return doc
