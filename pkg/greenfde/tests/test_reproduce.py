import json
import os

import numpy as np
import pytest

from greenfde.core.analysis import StudyReport, StudyRow
from greenfde.core.exceptions import ConfigError
from greenfde.core.quadrature import make_grid
from greenfde.core.reports import (
    fmt6,
    fmt17,
    kernel_csv,
    solution_csv,
    study_csv,
    to_json,
    write_text,
)
from greenfde.core.reproduce import Expectation, compare, load_expectations, reproduce
from greenfde.core.solver import solve


def _study(rows):
    return StudyReport(name="demo", rows=rows, reference="exact")


def test_number_formats():
    assert fmt6(None) == ""
    assert fmt6(1.5475e-05) == "1.5475e-05"
    assert fmt6(0.0004) == "0.0004"
    assert fmt17(0.1) == "0.10000000000000001"


def test_json_is_strict_and_sorted():
    data = {"b": float("nan"), "a": np.float64(1.0), "c": np.arange(2), "d": np.bool_(True)}
    text = to_json(data)
    assert text.endswith("}\n")
    assert json.loads(text) == {"a": 1.0, "b": None, "c": [0, 1], "d": True}
    assert text.index('"a"') < text.index('"b"') < text.index('"c"')


def test_study_csv():
    rows = [
        StudyRow(n=50, h2=4e-4, K=3, error=6.1899e-05, converged=True, order=2.0),
        StudyRow(n=100, h2=1e-4, failure="DivergenceError: boom"),
    ]
    assert study_csv(_study(rows)) == (
        "N,h2,K,error,order\n50,0.0004,3,6.1899e-05,2\n100,0.0001,,,\n"
    )


def test_solution_csv_columns(exponential):
    report = solve(exponential, make_grid(1.0, 4))
    lines = solution_csv(report).splitlines()
    assert lines[0] == "t,U,exact,abs_diff"
    assert len(lines) == 6
    assert lines[1].startswith("0,")
    assert lines[-1].split(",")[0] == "1"


def test_kernel_csv():
    points = np.array([0.0, 0.5])
    text = kernel_csv(points, points, np.array([[0.0, 0.0], [1.0, 2.0]]))
    assert text == "t,s=0,s=0.5\n0,0,0\n0.5,1,2\n"


def test_write_text_creates_directories(tmp_path):
    path = tmp_path / "a" / "b" / "out.csv"
    write_text(str(path), "x\n")
    assert path.read_text() == "x\n"


def test_bundled_expectations():
    expectations = {e.name: e for e in load_expectations()}
    assert set(expectations) == {
        "exponential",
        "trigonometric",
        "sine",
        "quadratic_growth",
        "cubic_growth",
    }
    ex1 = expectations["exponential"]
    assert ex1.K == 3
    assert ex1.factor == 2.0
    assert 800 in ex1.grids
    assert 800 not in ex1.errors
    assert ex1.errors[100] == 1.5475e-05
    assert os.path.isfile(ex1.config)
    assert expectations["trigonometric"].solution
    assert expectations["trigonometric"].errors == {}
    assert expectations["sine"].K == 25
    assert expectations["quadratic_growth"].K == 15
    assert expectations["cubic_growth"].K == 21


def test_expectations_file_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_expectations(str(tmp_path / "missing.yml"))
    bad = tmp_path / "expected.yml"
    bad.write_text("demo:\n  grids: [10]\n")
    with pytest.raises(ConfigError):
        load_expectations(str(bad))
    bad.write_text("demo:\n  config: x.yml\n  grids: [ten]\n")
    with pytest.raises(ConfigError):
        load_expectations(str(bad))


def test_compare_reports_each_mismatch():
    exp = Expectation(name="demo", config="x.yml", grids=[50, 100, 200], K=3, errors={50: 1e-4})
    study = _study(
        [
            StudyRow(n=50, h2=4e-4, K=3, error=1e-3, converged=True),
            StudyRow(n=100, h2=1e-4, K=4, error=2.5e-5, converged=True),
            StudyRow(n=200, h2=2.5e-5, K=2, failure="MaxIterExceeded: no convergence"),
        ]
    )
    problems = compare(exp, study)
    assert len(problems) == 3
    assert problems[0].startswith("N=50: error")
    assert problems[1] == "N=100: K=4, expected 3"
    assert problems[2].startswith("N=200: did not converge")
    ok = _study([StudyRow(n=50, h2=4e-4, K=3, error=1.5e-4, converged=True)])
    assert compare(exp, ok) == []


def test_reproduce_writes_tables_and_summary(bundled, tmp_path):
    expectations = [
        Expectation(name="ex1", config=bundled("exponential.yml"), grids=[20, 40], solution=True),
        Expectation(name="tight", config=bundled("exponential.yml"), grids=[20], errors={20: 1e-12}),
        Expectation(name="gone", config=str(tmp_path / "nope.yml"), grids=[20]),
    ]
    out_dir = tmp_path / "out"
    outcomes = reproduce(str(out_dir), expectations)

    ex1, tight, gone = outcomes
    assert ex1.passed
    assert (out_dir / "ex1_study.csv").read_text().startswith("N,h2,K,error,order\n20,")
    assert json.loads((out_dir / "ex1_report.json").read_text())["reference"] == "exact"
    # N=100 from the document is not among the study grids, so it is solved separately.
    assert (out_dir / "ex1_solution.csv").read_text().count("\n") == 102

    assert not tight.passed
    assert tight.mismatches[0].startswith("N=20: error")

    assert not gone.passed
    assert "not found" in gone.error
    assert not (out_dir / "gone_study.csv").exists()

    summary = (out_dir / "summary.csv").read_text().splitlines()
    assert summary[0] == "name,N,K,expected_K,error,expected_error,status"
    assert summary[1].startswith("ex1,20,") and summary[1].endswith(",ok")
    assert summary[3].startswith("tight,20,") and summary[3].endswith(",mismatch")
    assert summary[4] == "gone,,,,,,error"
    report = json.loads((out_dir / "summary.json").read_text())
    assert [o["passed"] for o in report] == [True, False, False]
