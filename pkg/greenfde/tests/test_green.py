import math

import numpy as np
import pytest

from greenfde.core.exceptions import SingularGreenSystem, SingularGSystem
from greenfde.core.green import (
    COEFF_CACHE_LIMIT,
    BoundaryPolynomial,
    GreenTable,
    build_g,
    build_green,
    compute_m0,
    eval_green,
    green_coefficients,
    green_system,
    integrate_green,
)
from greenfde.core.problem import BoundaryRow, ProblemSpec, delay_points
from greenfde.core.quadrature import make_grid


def _closed_form_exponential(t, s):
    # u(0) = u'(0) = 0, u'(1) = 0
    return -(1.0 - s) * t**2 / 2.0 + np.where(t >= s, (t - s) ** 2 / 2.0, 0.0)


def _closed_form_sine(t, s):
    # u(0) = u'(0) = 0, u(pi) = 0
    c = -((math.pi - s) ** 2) / (2.0 * math.pi**2)
    return c * t**2 + np.where(t >= s, (t - s) ** 2 / 2.0, 0.0)


def _trapezoid(y, x):
    h = x[1] - x[0]
    return float(h * (np.sum(y) - 0.5 * (y[0] + y[-1])))


@pytest.mark.parametrize(
    "fixture,closed_form",
    [("exponential", _closed_form_exponential), ("sine", _closed_form_sine)],
)
def test_matches_closed_form(request, fixture, closed_form):
    spec = request.getfixturevalue(fixture)
    table = GreenTable(spec)
    x = np.linspace(0.0, spec.a, 101)
    t, s = np.meshgrid(x, x, indexing="ij")
    np.testing.assert_allclose(table.evaluate(t, s), closed_form(t, s), atol=1e-10, rtol=0)


def test_build_green_returns_six_coefficients(exponential):
    c = build_green(exponential, 0.25)
    assert len(c) == 6
    # left piece: -(1 - s)/2 * t^2
    assert c[0] == pytest.approx(0.0, abs=1e-14)
    assert c[1] == pytest.approx(0.0, abs=1e-14)
    assert c[2] == pytest.approx(-0.375)


def _random_spec(rng, a):
    def row(endpoint):
        return BoundaryRow(endpoint, *rng.normal(size=3))

    if rng.random() < 0.5:
        rows = (row("left"), row("left"), row("right"))
    else:
        rows = (row("left"), row("right"), row("right"))
    return ProblemSpec.from_sources(a, rows, "0")


def test_random_boundary_rows_satisfy_green_conditions():
    rng = np.random.default_rng(2024)
    s = np.linspace(0.0, 1.5, 13)
    checked = draws = 0
    while checked < 50:
        draws += 1
        assert draws <= 500
        spec = _random_spec(rng, 1.5)
        A, rhs = green_system(spec, s)
        # admissible sets: well away from a singular homogeneous problem
        if np.max(np.linalg.cond(A)) > 1e6:
            continue
        c = green_coefficients(spec, s)
        checked += 1
        residual = np.einsum("kij,kj->ki", A, c) - rhs
        np.testing.assert_allclose(residual, 0.0, atol=1e-10)
        for row in spec.rows:
            piece = c[:, 0:3] if row.endpoint == "left" else c[:, 3:6]
            np.testing.assert_allclose(piece @ row.functional(spec.a), 0.0, atol=1e-10)
        # continuity of G and dG/dt at t = s, unit jump of the second derivative
        left = c[:, 0] + c[:, 1] * s + c[:, 2] * s**2
        right = c[:, 3] + c[:, 4] * s + c[:, 5] * s**2
        np.testing.assert_allclose(left, right, atol=1e-10)
        np.testing.assert_allclose(c[:, 1] + 2 * c[:, 2] * s, c[:, 4] + 2 * c[:, 5] * s, atol=1e-10)
        np.testing.assert_allclose(2 * c[:, 5] - 2 * c[:, 2], 1.0, atol=1e-10)


def test_singular_homogeneous_problem():
    # constants solve u'(0) = u''(0) = u'(1) = 0
    rows = (
        BoundaryRow("left", 0.0, 1.0, 0.0),
        BoundaryRow("left", 0.0, 0.0, 1.0),
        BoundaryRow("right", 0.0, 1.0, 0.0),
    )
    spec = ProblemSpec.from_sources(1.0, rows, "0")
    with pytest.raises(SingularGreenSystem) as exc:
        GreenTable(spec)
    assert exc.value.condition > 1e12
    with pytest.raises(SingularGSystem):
        build_g(spec)


def test_boundary_polynomial(exponential):
    g = build_g(exponential)
    assert g.coefficients == pytest.approx((1.0, 1.0, (math.e - 1.0) / 2.0))
    assert g(0.0) == pytest.approx(1.0)
    assert g.derivative(1.0) == pytest.approx(math.e)
    assert g.norm(1.0) == pytest.approx(2.0 + (math.e - 1.0) / 2.0)
    np.testing.assert_allclose(g(np.array([0.0, 1.0])), [1.0, 2.0 + (math.e - 1.0) / 2.0])


def test_norm_finds_interior_vertex():
    assert BoundaryPolynomial(0.0, 1.0, -1.0).norm(1.0) == pytest.approx(0.25)
    assert BoundaryPolynomial(0.0, 1.0, -1.0).norm(0.25) == pytest.approx(0.1875)


def test_m0_exponential(exponential):
    m0 = compute_m0(GreenTable(exponential), make_grid(1.0, 1000))
    assert m0 == pytest.approx(1.0 / 12.0, abs=1e-12)


@pytest.mark.parametrize(
    "fixture,closed_form",
    [("exponential", _closed_form_exponential), ("sine", _closed_form_sine)],
)
def test_m0_matches_brute_force(request, fixture, closed_form):
    spec = request.getfixturevalue(fixture)
    grid = make_grid(spec.a, 40)
    s = np.linspace(0.0, spec.a, 20001)
    brute = max(_trapezoid(np.abs(closed_form(t, s)), s) for t in grid.nodes)
    assert compute_m0(GreenTable(spec), grid) == pytest.approx(brute, abs=1e-6)


def test_absolute_integral_with_sign_changes():
    rows = (
        BoundaryRow("left", 1.0, 0.0, 0.0),
        BoundaryRow("right", 1.0, 0.0, 0.0),
        BoundaryRow("right", 0.0, 1.0, 0.0),
    )
    spec = ProblemSpec.from_sources(2.0, rows, "0")
    table = GreenTable(spec)
    ts = np.array([0.3, 0.77, 2.0])
    s = np.linspace(0.0, 2.0, 20001)
    got = integrate_green(table, ts, make_grid(2.0, 50), absolute=True)
    for value, t in zip(got, ts):
        assert value == pytest.approx(_trapezoid(np.abs(table.evaluate(t, s)), s), abs=1e-6)


def test_signed_integral_exponential(exponential):
    table = GreenTable(exponential)
    grid = make_grid(1.0, 10)
    got = integrate_green(table, [0.5, 0.37, 1.0], grid)
    t = np.array([0.5, 0.37, 1.0])
    np.testing.assert_allclose(got, t**3 / 6.0 - t**2 / 4.0, atol=1e-12)
    assert got[0] == pytest.approx(-0.0416667, abs=1e-7)


def test_eval_green_checks_the_square(exponential):
    table = GreenTable(exponential)
    assert eval_green(table, 0.5, 0.25) == pytest.approx(float(_closed_form_exponential(0.5, 0.25)))
    with pytest.raises(ValueError):
        eval_green(table, 1.5, 0.25)
    with pytest.raises(ValueError):
        eval_green(table, 0.5, -0.1)
    with pytest.raises(ValueError):
        green_coefficients(exponential, [2.0])


def test_grid_kernels_are_cached(exponential):
    table = GreenTable(exponential)
    grid = make_grid(1.0, 20)
    xi = delay_points(exponential, grid)
    first = table.grid_kernels(grid, xi)
    assert table.grid_kernels(grid, xi) is first
    assert first.nodes.shape == (21, 21)
    np.testing.assert_allclose(first.delay, table.evaluate(xi[:, None], grid.nodes[None, :]))
    with pytest.raises(ValueError):
        first.nodes[0, 0] = 1.0


def test_m0_is_stable_under_refinement(exponential, sine):
    table = GreenTable(exponential)
    coarse = compute_m0(table, make_grid(1.0, 1000))
    fine = compute_m0(table, make_grid(1.0, 2000))
    assert abs(fine - coarse) <= 1e-9

    # nested grids only add sample points t_i, and each integral is exact
    table = GreenTable(sine)
    coarse = compute_m0(table, make_grid(sine.a, 1000))
    fine = compute_m0(table, make_grid(sine.a, 2000))
    assert fine >= coarse - 1e-12


def test_coefficient_cache_is_bounded(exponential):
    table = GreenTable(exponential)
    s = np.linspace(0.0, 1.0, 3001)
    for shift in (0.0, 1e-7, 2e-7, 3e-7):
        table.evaluate(0.5, np.clip(s + shift, 0.0, 1.0))
        assert len(table._coeffs) <= COEFF_CACHE_LIMIT
    np.testing.assert_allclose(
        table.evaluate(0.5, s), _closed_form_exponential(0.5, s), atol=1e-12
    )

    many = np.linspace(0.0, 1.0, COEFF_CACHE_LIMIT + 1)
    values = table.evaluate(0.25, many)
    assert len(table._coeffs) <= COEFF_CACHE_LIMIT
    np.testing.assert_allclose(values, _closed_form_exponential(0.25, many), atol=1e-12)
