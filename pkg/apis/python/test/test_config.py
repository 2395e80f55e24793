import pytest
from common import *

from brumer_stark.cache import CACHE_ENV_VAR
from brumer_stark.config import RunConfig
from brumer_stark.errors import ConfigError
from brumer_stark.errors import NotFundamental
from brumer_stark.errors import NotInert
from brumer_stark.errors import Ramified
from brumer_stark.errors import UnsupportedSmoothing


def test_validate_returns_field():
    F = RunConfig(D=221, p=3, ell=5).validate()
    assert F == make_field(221)
    assert RunConfig(D=897, p=5, ell=7).validate().D == 897


@pytest.mark.parametrize(
    "overrides",
    [
        {"precision": 0},
        {"guard_digits": -1},
        {"precision": 10, "guard_digits": 10},
        {"max_level": 0},
        {"max_level": 7},
        {"max_moment": 0},
        {"output": "yaml"},
        {"sqrt_branch": 0},
        {"ell_branch": 2},
        {"orientation": "sideways"},
        {"workers": 0},
        {"p": 9},
        {"p": 2},
    ],
)
def test_validate_config_errors(overrides):
    with pytest.raises(ConfigError):
        RunConfig(**{"D": 221, "p": 3, "ell": 5, **overrides}).validate()


def test_validate_arithmetic_errors():
    with pytest.raises(NotFundamental):
        RunConfig(D=9, p=3).validate()
    with pytest.raises(Ramified):
        RunConfig(D=221, p=13).validate()
    with pytest.raises(NotInert):
        RunConfig(D=221, p=5, ell=7).validate()
    for ell in (2, 3, 9, 13, 17):
        with pytest.raises(UnsupportedSmoothing):
            RunConfig(D=221, p=3, ell=ell).validate()
    # 2 splits in Q(sqrt(17)), and is still refused
    with pytest.raises(UnsupportedSmoothing, match="even where 2 splits"):
        RunConfig(D=17, p=3, ell=2).validate()


def test_config_checks_run_before_the_field():
    # a bad precision is reported even for a bad discriminant
    with pytest.raises(ConfigError):
        RunConfig(D=9, p=3, precision=0).validate()


def test_with_default_cache(tmp_path, monkeypatch):
    monkeypatch.setenv(CACHE_ENV_VAR, str(tmp_path / "zeta.ndjson"))
    config = RunConfig.with_default_cache(D=221, p=3)
    assert config.cache_path == tmp_path / "zeta.ndjson"
    assert RunConfig(D=221, p=3).cache_path is None


def test_to_dict(tmp_path):
    config = RunConfig(D=221, p=3, ell=5, precision=40, cache_path=tmp_path / "zeta.ndjson")
    d = config.to_dict()
    assert d["D"] == 221
    assert d["precision"] == 40
    assert d["cache_path"] == str(tmp_path / "zeta.ndjson")
    assert d["orientation"] == "euler"
    assert json.loads(json.dumps(d)) == d
    assert RunConfig(D=221, p=3).to_dict()["cache_path"] is None
