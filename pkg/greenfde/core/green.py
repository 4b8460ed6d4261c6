"""Green function of u''' = psi under the problem's homogeneous boundary rows.

For a source point s the Green function is two quadratics in t,

    G(t, s) = c0m + c1m*t + c2m*t^2   for t <= s
    G(t, s) = c0p + c1p*t + c2p*t^2   for t >= s

fixed by the three homogeneous rows, continuity of G and dG/dt at t = s and a
unit jump of d2G/dt2 across t = s. The six coefficients come from a 6x6 solve
per s; rows on the left endpoint act on the first piece, rows on the right on
the second one.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, Tuple

import numpy as np

from greenfde.core.exceptions import SingularGreenSystem, SingularGSystem
from greenfde.core.problem import ProblemSpec
from greenfde.core.quadrature import Grid

_log = logging.getLogger(__name__)

COND_LIMIT = 1e12
# Upper bound on cached per-s coefficient rows; the cache is dropped when it would overflow.
COEFF_CACHE_LIMIT = 8192


@dataclass(frozen=True)
class BoundaryPolynomial:
    """g(t) = g0 + g1*t + g2*t^2 carrying the inhomogeneous boundary data."""

    g0: float
    g1: float
    g2: float

    @property
    def coefficients(self) -> Tuple[float, float, float]:
        return (self.g0, self.g1, self.g2)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = self.g0 + (self.g1 + self.g2 * t) * t
        return float(out) if out.ndim == 0 else out

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        out = self.g1 + 2.0 * self.g2 * t
        return float(out) if out.ndim == 0 else out

    def norm(self, a: float) -> float:
        """max |g| over [0, a], exact for a quadratic."""
        candidates = [0.0, float(a)]
        if self.g2 != 0.0:
            vertex = -self.g1 / (2.0 * self.g2)
            if 0.0 < vertex < a:
                candidates.append(vertex)
        return max(abs(self(x)) for x in candidates)


@dataclass(frozen=True, eq=False)
class GridKernels:
    """G(t_i, s_j) and G(xi_i, s_j) on one grid."""

    nodes: np.ndarray = field(repr=False)
    delay: np.ndarray = field(repr=False)


def _basis(x: np.ndarray) -> np.ndarray:
    return np.stack([np.ones_like(x), x, x * x], axis=-1)


def _basis_d1(x: np.ndarray) -> np.ndarray:
    return np.stack([np.zeros_like(x), np.ones_like(x), 2.0 * x], axis=-1)


def green_system(spec: ProblemSpec, s: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Stacked 6x6 systems (one per s) and the shared right-hand side."""
    s = np.asarray(s, dtype=float).reshape(-1)
    n = s.shape[0]
    A = np.zeros((n, 6, 6))
    for i, row in enumerate(spec.rows):
        offset = 0 if row.endpoint == "left" else 3
        A[:, i, offset : offset + 3] = row.functional(spec.a)
    A[:, 3, 0:3] = _basis(s)
    A[:, 3, 3:6] = -_basis(s)
    A[:, 4, 0:3] = _basis_d1(s)
    A[:, 4, 3:6] = -_basis_d1(s)
    A[:, 5, 2] = -2.0
    A[:, 5, 5] = 2.0
    rhs = np.array([0.0, 0.0, 0.0, 0.0, 0.0, 1.0])
    return A, rhs


def green_coefficients(spec: ProblemSpec, s: Iterable[float]) -> np.ndarray:
    """Coefficients (c0m, c1m, c2m, c0p, c1p, c2p) for every s, shape (len(s), 6).

    The endpoints s = 0 and s = a are accepted as limits of interior source points.
    """
    s = np.asarray(list(s) if not isinstance(s, np.ndarray) else s, dtype=float).reshape(-1)
    if s.size == 0:
        return np.zeros((0, 6))
    if np.any(~np.isfinite(s)) or np.any(s < 0.0) or np.any(s > spec.a):
        raise ValueError(f"source points must lie in [0, {spec.a!r}]")
    A, rhs = green_system(spec, s)
    with np.errstate(all="ignore"):
        cond = np.linalg.cond(A)
    worst = float(np.max(np.where(np.isfinite(cond), cond, np.inf)))
    if worst > COND_LIMIT:
        raise SingularGreenSystem(
            "homogeneous problem has nontrivial solutions; the Green function does not exist "
            f"(condition estimate {worst:.3g})",
            condition=worst,
        )
    b = np.broadcast_to(rhs, (s.shape[0], 6))[..., None]
    return np.linalg.solve(A, b)[..., 0]


def build_green(spec: ProblemSpec, s: float) -> Tuple[float, ...]:
    """Six piece coefficients of G(., s)."""
    return tuple(float(c) for c in green_coefficients(spec, [float(s)])[0])


def _evaluate_pieces(c: np.ndarray, t: np.ndarray, s: np.ndarray) -> np.ndarray:
    left = c[..., 0] + (c[..., 1] + c[..., 2] * t) * t
    right = c[..., 3] + (c[..., 4] + c[..., 5] * t) * t
    return np.where(t <= s, left, right)


class GreenTable:
    """Green function of one problem with per-s coefficient and per-grid matrix caches."""

    def __init__(self, spec: ProblemSpec):
        self.spec = spec
        self.a = spec.a
        self._coeffs: Dict[float, np.ndarray] = {}
        self._kernels: Dict[Tuple[int, float, bytes], GridKernels] = {}
        # Fails early for problems without a Green function.
        self.coefficients([0.5 * spec.a])

    def coefficients(self, s: Iterable[float]) -> np.ndarray:
        s = np.asarray(list(s) if not isinstance(s, np.ndarray) else s, dtype=float).reshape(-1)
        wanted = list(dict.fromkeys(s.tolist()))
        if len(wanted) > COEFF_CACHE_LIMIT:
            return green_coefficients(self.spec, s)
        missing = [x for x in wanted if x not in self._coeffs]
        if missing:
            if len(self._coeffs) + len(missing) > COEFF_CACHE_LIMIT:
                self._coeffs.clear()
                missing = wanted
            solved = green_coefficients(self.spec, np.array(missing))
            for x, c in zip(missing, solved):
                c.setflags(write=False)
                self._coeffs[x] = c
        if s.size == 0:
            return np.zeros((0, 6))
        return np.stack([self._coeffs[x] for x in s.tolist()])

    def evaluate(self, t, s) -> np.ndarray:
        """G on broadcast arrays; the left piece is used at t == s."""
        t, s = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(s, dtype=float))
        uniq, inverse = np.unique(s, return_inverse=True)
        c = self.coefficients(uniq)[inverse.reshape(-1)].reshape(s.shape + (6,))
        return _evaluate_pieces(c, t, s)

    def grid_kernels(self, grid: Grid, xi: np.ndarray) -> GridKernels:
        """G(t_i, s_j) and G(xi_i, s_j) for s_j the grid nodes; cached per (grid, xi)."""
        xi = np.asarray(xi, dtype=float)
        key = (grid.n, grid.a, xi.tobytes())
        cached = self._kernels.get(key)
        if cached is not None:
            return cached
        c = green_coefficients(self.spec, grid.nodes)[None, :, :]
        s = grid.nodes[None, :]
        nodes = _evaluate_pieces(c, grid.nodes[:, None], s)
        delay = _evaluate_pieces(c, xi[:, None], s)
        nodes.setflags(write=False)
        delay.setflags(write=False)
        kernels = GridKernels(nodes=nodes, delay=delay)
        self._kernels[key] = kernels
        _log.debug("Built Green matrices for N=%d", grid.n)
        return kernels


def eval_green(table: GreenTable, t: float, s: float) -> float:
    if not (0.0 <= t <= table.a and 0.0 <= s <= table.a):
        raise ValueError(f"(t, s) = ({t!r}, {s!r}) outside [0, {table.a!r}]^2")
    return float(table.evaluate(t, s))


def build_g(spec: ProblemSpec) -> BoundaryPolynomial:
    """Quadratic g with B_i[g] = b_i for the three rows."""
    A = np.stack([row.functional(spec.a) for row in spec.rows])
    b = np.array([row.b for row in spec.rows])
    cond = float(np.linalg.cond(A)) if np.all(np.isfinite(A)) else float("inf")
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise SingularGSystem(
            f"boundary rows do not determine a unique quadratic (condition estimate {cond:.3g})",
            condition=cond,
        )
    g0, g1, g2 = np.linalg.solve(A, b)
    return BoundaryPolynomial(float(g0), float(g1), float(g2))


# --- exact cell integration of G(t, .) and |G(t, .)| ---


def _cell_integrals(y0: np.ndarray, ym: np.ndarray, y1: np.ndarray, w: np.ndarray, absolute: bool):
    """Integrals over cells of width w of the quadratic through (0,y0), (w/2,ym), (w,y1)."""
    if not absolute:
        return w / 6.0 * (y0 + 4.0 * ym + y1)
    with np.errstate(all="ignore"):
        C = np.where(w > 0, 2.0 * (y0 - 2.0 * ym + y1) / (w * w), 0.0)
        B = np.where(w > 0, (y1 - y0) / w - C * w, 0.0)
        A = y0
        disc = B * B - 4.0 * A * C
        sq = np.sqrt(np.where(disc >= 0, disc, np.nan))
        qq = -0.5 * (B + np.copysign(sq, B))
        r1 = qq / C
        r2 = A / qq
    pts = [np.zeros_like(w)]
    for r in (r1, r2):
        inside = np.isfinite(r) & (r > 0) & (r < w)
        pts.append(np.where(inside, r, w))
    pts.append(w)
    pts = np.sort(np.stack(pts, axis=-1), axis=-1)
    Q = A[..., None] * pts + B[..., None] * pts**2 / 2.0 + C[..., None] * pts**3 / 3.0
    return np.sum(np.abs(np.diff(Q, axis=-1)), axis=-1)


def integrate_green(
    table: GreenTable, t_values: Iterable[float], grid: Grid, absolute: bool = False
) -> np.ndarray:
    """Exact integral over s in [0, a] of G(t, s) (or |G(t, s)|) for each t.

    For fixed t, s -> G(t, s) is quadratic on each grid cell once the cell that
    contains s = t is split there, so three samples per cell fix it exactly.
    """
    if not isinstance(t_values, np.ndarray):
        t_values = list(t_values)
    t_values = np.asarray(t_values, dtype=float)
    nodes = grid.nodes
    mids = 0.5 * (nodes[:-1] + nodes[1:])
    c_nodes = table.coefficients(nodes)
    c_mids = table.coefficients(mids)
    out = np.empty(t_values.shape[0])
    for k, t in enumerate(t_values):
        left, mid, right = nodes[:-1], mids, nodes[1:]
        cl, cm, cr = c_nodes[:-1], c_mids, c_nodes[1:]
        j = int(np.searchsorted(nodes, t, side="right")) - 1
        if 0 <= j < grid.n and nodes[j] < t < nodes[j + 1]:
            # Split cell j at the breakpoint s = t.
            ms = np.array([0.5 * (nodes[j] + t), 0.5 * (t + nodes[j + 1])])
            c_t, c_m1, c_m2 = table.coefficients([t, ms[0], ms[1]])
            left = np.concatenate([left[:j], [nodes[j], t], left[j + 1 :]])
            mid = np.concatenate([mid[:j], ms, mid[j + 1 :]])
            right = np.concatenate([right[:j], [t, nodes[j + 1]], right[j + 1 :]])
            cl = np.concatenate([cl[:j], [c_nodes[j], c_t], cl[j + 1 :]])
            cm = np.concatenate([cm[:j], [c_m1, c_m2], cm[j + 1 :]])
            cr = np.concatenate([cr[:j], [c_t, c_nodes[j + 1]], cr[j + 1 :]])
        y0 = _evaluate_pieces(cl, t, left)
        ym = _evaluate_pieces(cm, t, mid)
        y1 = _evaluate_pieces(cr, t, right)
        out[k] = float(np.sum(_cell_integrals(y0, ym, y1, right - left, absolute)))
    return out


def compute_m0(table: GreenTable, grid: Grid) -> float:
    """M0 = max over grid nodes t_i of the integral of |G(t_i, s)| over [0, a]."""
    m0 = float(np.max(integrate_green(table, grid.nodes, grid, absolute=True)))
    _log.debug("M0 = %.12g on N=%d", m0, grid.n)
    return m0
