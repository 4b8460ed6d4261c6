"""Uniform grids and composite trapezoid sums on [0, a]."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from greenfde.core.exceptions import GridError


@dataclass(frozen=True)
class Grid:
    a: float
    n: int
    h: float
    nodes: np.ndarray = field(repr=False, compare=False)
    weights: np.ndarray = field(repr=False, compare=False)

    @property
    def size(self) -> int:
        return self.n + 1

    def integrate(self, kernel: np.ndarray, values: np.ndarray) -> np.ndarray:
        """Row-wise ``h * sum_j rho_j * kernel[i, j] * values[j]``, accumulated in ascending j.

        Each row matches ``weighted_sum`` bit for bit.
        """
        kernel = np.asarray(kernel, dtype=float)
        values = np.asarray(values, dtype=float)
        if kernel.shape[-1] != self.size or values.shape != (self.size,):
            raise GridError(
                f"expected {self.size} columns and values, got {kernel.shape} and {values.shape}"
            )
        total = np.zeros(kernel.shape[:-1])
        for j in range(self.size):
            total += self.weights[j] * kernel[..., j] * values[j]
        return self.h * total


def make_grid(a: float, n: int) -> Grid:
    """Uniform partition t_i = i*h, h = a/n, with trapezoid weights 1/2, 1, ..., 1, 1/2."""
    try:
        a = float(a)
    except (TypeError, ValueError):
        raise GridError(f"interval length must be a real number, got {a!r}") from None
    if not math.isfinite(a) or a <= 0.0:
        raise GridError(f"interval length must be positive and finite, got {a!r}")
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 2:
        raise GridError(f"number of cells must be an integer >= 2, got {n!r}")
    n = int(n)
    h = a / n
    nodes = np.arange(n + 1, dtype=float) * h
    nodes[-1] = a
    weights = np.ones(n + 1)
    weights[0] = weights[-1] = 0.5
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return Grid(a=a, n=n, h=h, nodes=nodes, weights=weights)


def weighted_sum(grid: Grid, kernel_row: Sequence[float], values: Sequence[float]) -> float:
    """Trapezoid approximation of the integral of kernel * values over [0, a].

    Terms are accumulated in ascending j.
    """
    if len(kernel_row) != grid.size or len(values) != grid.size:
        raise GridError(
            f"expected {grid.size} kernel and value entries, "
            f"got {len(kernel_row)} and {len(values)}"
        )
    total = 0.0
    for rho, k, val in zip(grid.weights, kernel_row, values):
        total += float(rho) * float(k) * float(val)
    return grid.h * total
