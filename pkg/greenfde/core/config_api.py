from __future__ import annotations

from typing import Any, Dict, List, Optional

from greenfde.core.exceptions import ConfigError


def cli_overrides(
    *,
    n: Optional[int] = None,
    tol: Optional[float] = None,
    max_iter: Optional[int] = None,
    M: Optional[float] = None,
    samples: Optional[int] = None,
) -> Dict[str, Any]:
    """Config keys set on the command line; unset options do not override the file."""
    pairs = {"N": n, "tol": tol, "max_iter": max_iter, "M": M, "samples": samples}
    return {k: v for k, v in pairs.items() if v is not None}


def parse_grids(text: str) -> List[int]:
    """'50,100,200' -> [50, 100, 200] (sorted, de-duplicated)."""
    out = set()
    for part in (p.strip() for p in str(text).split(",")):
        if not part:
            continue
        try:
            n = int(part)
        except ValueError as e:
            raise ConfigError(f"invalid grid size {part!r} in --grids") from e
        if n < 2:
            raise ConfigError(f"grid size must be >= 2, got {n}")
        out.add(n)
    if not out:
        raise ConfigError("--grids needs at least one grid size")
    return sorted(out)
