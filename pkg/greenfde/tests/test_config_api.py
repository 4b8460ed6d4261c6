import pytest

from greenfde.core.config_api import cli_overrides, parse_grids
from greenfde.core.exceptions import ConfigError


def test_cli_overrides_drop_unset_options():
    assert cli_overrides() == {}
    assert cli_overrides(n=50, tol=None, M=2.0) == {"N": 50, "M": 2.0}
    assert cli_overrides(max_iter=5, samples=16, tol=1e-6) == {
        "max_iter": 5,
        "samples": 16,
        "tol": 1e-6,
    }


def test_parse_grids():
    assert parse_grids("100, 50,50,") == [50, 100]
    assert parse_grids("1000") == [1000]


@pytest.mark.parametrize("text", ["", " , ", "50,abc", "1", "50,-4", "2.5"])
def test_parse_grids_rejects(text):
    with pytest.raises(ConfigError):
        parse_grids(text)
