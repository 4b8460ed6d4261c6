import math
import os

import pytest

from greenfde.core.problem import BoundaryRow, ProblemSpec

PROBLEMS_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "problems")

# u(0) = 1, u'(0) = 1, u'(1) = e
EXPONENTIAL_ROWS = (
    BoundaryRow("left", 1.0, 0.0, 0.0, 1.0),
    BoundaryRow("left", 0.0, 1.0, 0.0, 1.0),
    BoundaryRow("right", 0.0, 1.0, 0.0, math.e),
)


@pytest.fixture
def bundled():
    """Path of a bundled problem document."""

    def _path(name: str) -> str:
        return os.path.join(PROBLEMS_DIR, name)

    return _path


@pytest.fixture
def exponential():
    return ProblemSpec.from_sources(
        1.0, EXPONENTIAL_ROWS, "e^t - 1/4*u + 1/4*v^2", "t/2", "exp(t)", name="exponential"
    )


@pytest.fixture
def trigonometric():
    rows = (
        BoundaryRow("left", 1.0, 0.0, 0.0, 0.0),
        BoundaryRow("left", 0.0, 1.0, 0.0, math.pi),
        BoundaryRow("right", 0.0, 1.0, 0.0, -math.pi),
    )
    return ProblemSpec.from_sources(1.0, rows, "sin(u^2) + cos(v^2)", "t^2", name="trigonometric")


@pytest.fixture
def sine():
    rows = (
        BoundaryRow("left", 1.0, 0.0, 0.0, 0.0),
        BoundaryRow("left", 0.0, 1.0, 0.0, 1.0),
        BoundaryRow("right", 1.0, 0.0, 0.0, 0.0),
    )
    return ProblemSpec.from_sources(math.pi, rows, "-1 + 2*v^2", "t/2", "sin(t)", name="sine")


@pytest.fixture
def homogeneous_rows():
    return tuple(BoundaryRow(r.endpoint, r.alpha, r.beta, r.gamma, 0.0) for r in EXPONENTIAL_ROWS)


@pytest.fixture
def write_config(tmp_path):
    def _write(text: str, name: str = "problem.yml") -> str:
        path = tmp_path / name
        path.write_text(text)
        return str(path)

    return _write
