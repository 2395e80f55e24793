import pytest
from common import *

from brumer_stark.cli import SELFTESTS
from brumer_stark.cli import build_parser
from brumer_stark.cli import config_from_args
from brumer_stark.cli import main
from brumer_stark.shintani import cone_evaluations
from brumer_stark.shintani import reset_cone_evaluations


def run(capfd, *argv):
    code = main([str(a) for a in argv])
    out, err = capfd.readouterr()
    return code, out, err


def test_classgroup(capfd):
    code, out, err = run(capfd, "classgroup", "-D", 897)
    assert code == 0
    assert err == ""
    report = read_json(out)
    assert report["command"] == "classgroup"
    assert report["class_number"] == 8
    assert report["structure"] == [4, 2]
    assert len(report["representatives"]) == 8
    assert "query" not in report

    code, out, err = run(capfd, "classgroup", "-D", 221, "--format", "table")
    assert code == 0
    assert out.splitlines()[0] == "classgroup"
    assert out.splitlines()[1].startswith("h+=4")


def test_classgroup_eps_plus(capfd):
    code, out, _ = run(capfd, "classgroup", "-D", 5)
    assert read_json(out)["eps_plus"] == ["1", "1"]


def test_exit_codes(capfd):
    code, out, err = run(capfd, "classgroup", "-D", 9)
    assert code == 3
    assert out == ""
    assert err.startswith("brumer-stark: NotFundamental:")

    code, _, err = run(capfd, "zeta", "-D", 221, "-p", 5, "-l", 7, "--no-cache")
    assert code == 4
    assert "NotInert" in err

    code, _, err = run(capfd, "zeta", "-D", 221, "-p", 13, "--no-cache")
    assert code == 4

    code, _, err = run(capfd, "zeta", "-D", 221, "-p", 3, "-l", 13, "--no-cache")
    assert code == 5
    assert "UnsupportedSmoothing" in err

    code, _, err = run(capfd, "zeta", "-D", 221, "-p", 3, "-M", 0, "--no-cache")
    assert code == 2
    assert "ConfigError" in err

    code, _, err = run(capfd, "zeta", "-D", 221, "-p", 3, "--level", 7, "--no-cache")
    assert code == 5
    assert "LevelTooDeep" in err

    code, _, err = run(capfd, "zeta", "-D", 221, "-p", 3, "--class-index", 4, "--no-cache")
    assert code == 2


def test_argument_errors(capfd):
    with pytest.raises(SystemExit) as exc:
        main(["zeta", "-p", "3"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["compute", "-D", "221", "-p", "3", "--format", "yaml"])
    assert exc.value.code == 2
    capfd.readouterr()


def test_zeta(capfd):
    code, out, _ = run(capfd, "zeta", "-D", 221, "-p", 3, "--no-cache")
    assert code == 0
    report = read_json(out)
    assert report["schema"] == 1
    assert report["query"]["D"] == 221
    assert set(report["zeta"].values()) == {"3", "-3", "15", "-15"}
    assert report["s"] == 0
    assert "residue" not in report

    code, out, _ = run(capfd, "zeta", "-D", 221, "-p", 3, "--class-index", 1, "--level", 1, "--residue", 1, 2, "--no-cache")
    report = read_json(out)
    assert list(report["zeta"]) == ["1"]
    assert report["residue"] == [1, 2]
    assert report["level"] == 1

    code, out, _ = run(capfd, "zeta", "-D", 221, "-p", 3, "--s", 1, "--class-index", 0, "--no-cache")
    assert code == 0
    assert read_json(out)["s"] == -1


def test_zeta_uses_the_cache(capfd, tmp_path):
    path = tmp_path / "zeta.ndjson"
    argv = ["zeta", "-D", 321, "-p", 7, "--level", 1, "--residue", 2, 3, "--cache", path]
    code, cold, _ = run(capfd, *argv)
    assert code == 0
    assert path.exists()

    reset_cone_evaluations()
    code, warm, _ = run(capfd, *argv)
    assert code == 0
    assert cone_evaluations() == 0
    assert warm == cold


def test_cache_path_from_environment(capfd, tmp_path, monkeypatch):
    path = tmp_path / "env.ndjson"
    monkeypatch.setenv("BRUMER_STARK_CACHE", str(path))
    args = build_parser().parse_args(["zeta", "-D", "221", "-p", "3"])
    assert config_from_args(args).cache_path == path
    args = build_parser().parse_args(["zeta", "-D", "221", "-p", "3", "--no-cache"])
    assert config_from_args(args).cache_path is None

    code, _, _ = run(capfd, "zeta", "-D", 221, "-p", 3, "--class-index", 0)
    assert code == 0
    assert path.exists()


def test_measure(capfd):
    code, out, _ = run(capfd, "measure", "-D", 221, "-p", 3, "--class-index", 1, "--no-cache")
    assert code == 0
    report = read_json(out)
    assert report["level"] == 1
    assert len(report["measure"]) == 9
    assert report["total"] == report["zeta0"]
    assert report["measure"]["0,0"] == report["zeta0"]

    code, out, _ = run(capfd, "measure", "-D", 221, "-p", 3, "--format", "table", "--no-cache")
    assert code == 0
    assert out.splitlines()[0] == "measure"


def test_measure_oracle(capfd):
    code, out, _ = run(
        capfd, "measure", "-D", 221, "-p", 3, "-M", 10, "--guard-digits", 2, "--oracle-level", 2, "--no-cache"
    )
    assert code == 0
    oracle = read_json(out)["oracle"]
    assert oracle["level"] == 2
    assert oracle["agreement"] >= 1


def test_selftest(capfd):
    code, out, _ = run(capfd, "selftest")
    assert code == 0
    report = read_json(out)
    assert report["passed"]
    assert set(report["results"]) == set(SELFTESTS)


@pytest.mark.slow
def test_compute(capfd, tmp_path):
    code, out, _ = run(capfd, "compute", "-D", 221, "-p", 3, "-M", 60, "--cache", tmp_path / "zeta.ndjson")
    assert code == 0
    report = read_json(out)
    assert report["class_number"] == 4
    assert report["pairing"] == "exact"
    assert sorted(report["ord"].values()) == [-15, -3, 3, 15]
    poly = report["minimal_polynomial"]
    assert poly["degree"] == 4
    assert poly["coeffs"][0] == poly["coeffs"][-1] == {"a": 1, "b": 0, "k": 0}
    assert poly["coeffs"][1] == poly["coeffs"][3]


@pytest.mark.slow
def test_gross_check(capfd):
    code, out, _ = run(capfd, "gross-check", "-D", 221, "-p", 3, "-M", 20, "-m", 2, "--no-cache")
    assert code == 0
    report = read_json(out)
    assert report["m"] == 2
    assert len(report["characters"]) == 2
    assert report["min_valuation"] >= 1
    assert len(report["l_invariants"]) == 2
