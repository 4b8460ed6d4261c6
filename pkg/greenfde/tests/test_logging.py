import json
import logging

import pytest

from greenfde.core.logging import setup_logging
from greenfde.core.quadrature import make_grid
from greenfde.core.solver import solve


@pytest.fixture
def restore_logging():
    yield
    setup_logging("WARNING", "text")


def test_json_lines_carry_solver_context(capsys, exponential, restore_logging):
    setup_logging("DEBUG", "json")
    report = solve(exponential, make_grid(1.0, 10))
    entries = [json.loads(line) for line in capsys.readouterr().err.splitlines()]
    steps = [e for e in entries if e["name"] == "greenfde.core.solver" and e["level"] == "DEBUG"]
    assert [e["k"] for e in steps] == list(range(1, report.K + 1))
    assert all(e["N"] == 10 and e["problem"] == "exponential" for e in steps)
    assert steps[-1]["residual"] == report.final_residual


def test_text_format_and_level(capsys, restore_logging):
    log = setup_logging("info", "text")
    assert log.name == "greenfde"
    logging.getLogger("greenfde.test").debug("hidden")
    logging.getLogger("greenfde.test").info('quote " kept')
    err = capsys.readouterr().err
    assert "hidden" not in err
    assert 'INFO greenfde.test quote " kept' in err
