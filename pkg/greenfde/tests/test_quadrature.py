import math

import numpy as np
import pytest

from greenfde.core.exceptions import GridError
from greenfde.core.green import GreenTable, build_g
from greenfde.core.quadrature import make_grid, weighted_sum


def test_make_grid_nodes_and_weights():
    grid = make_grid(1.0, 4)
    np.testing.assert_array_equal(grid.nodes, [0.0, 0.25, 0.5, 0.75, 1.0])
    np.testing.assert_array_equal(grid.weights, [0.5, 1.0, 1.0, 1.0, 0.5])
    assert grid.h == 0.25
    assert grid.size == 5


def test_last_node_is_exactly_a():
    grid = make_grid(math.pi, 7)
    assert grid.nodes[-1] == math.pi
    assert grid.nodes[0] == 0.0


@pytest.mark.parametrize(
    "a,n",
    [
        (0.0, 10),
        (-1.0, 10),
        (float("nan"), 10),
        (float("inf"), 10),
        (1.0, 1),
        (1.0, 2.5),
        (1.0, True),
    ],
)
def test_make_grid_rejects_bad_arguments(a, n):
    with pytest.raises(GridError):
        make_grid(a, n)


def test_grid_arrays_are_read_only():
    grid = make_grid(1.0, 4)
    with pytest.raises(ValueError):
        grid.nodes[0] = 1.0


def test_trapezoid_is_exact_for_linear_integrands():
    grid = make_grid(2.0, 8)
    ones = np.ones(grid.size)
    assert weighted_sum(grid, ones, ones) == pytest.approx(2.0, abs=1e-15)
    assert weighted_sum(grid, ones, grid.nodes) == pytest.approx(2.0, abs=1e-15)


def test_integrate_matches_weighted_sum_row_by_row():
    grid = make_grid(1.0, 10)
    rng = np.random.default_rng(3)
    kernel = rng.normal(size=(4, grid.size))
    values = rng.normal(size=grid.size)
    rows = grid.integrate(kernel, values)
    for i in range(4):
        assert rows[i] == weighted_sum(grid, kernel[i], values)


def test_length_mismatch():
    grid = make_grid(1.0, 4)
    with pytest.raises(GridError):
        weighted_sum(grid, np.ones(4), np.ones(5))
    with pytest.raises(GridError):
        grid.integrate(np.ones((2, 5)), np.ones(4))


def _green_integral_error(spec, n, points_of, absolute=False):
    """max |grid sum - exact| for the integral of G(x, s) e^s, exact = e^x - g(x).

    G <= 0 for the exponential problem's rows, so the |G| integral is the negated one.
    """
    grid = make_grid(spec.a, n)
    table = GreenTable(spec)
    x = points_of(grid)
    kernel = table.evaluate(x[:, None], grid.nodes[None, :])
    exact = np.exp(x) - build_g(spec)(x)
    if absolute:
        assert np.all(kernel <= 1e-15)
        kernel, exact = np.abs(kernel), -exact
    approx = grid.integrate(kernel, np.exp(grid.nodes))
    return float(np.max(np.abs(approx - exact)))


@pytest.mark.parametrize("absolute", [False, True], ids=["signed", "absolute"])
@pytest.mark.parametrize(
    "points_of",
    [
        lambda grid: grid.nodes,
        lambda grid: np.array([1.0 / math.sqrt(2.0)]),
    ],
    ids=["on-grid", "off-grid"],
)
def test_green_quadrature_is_second_order(exponential, points_of, absolute):
    errors = [_green_integral_error(exponential, n, points_of, absolute) for n in (100, 200, 400)]
    for e1, e2 in zip(errors, errors[1:]):
        assert 1.8 <= math.log2(e1 / e2) <= 2.2
