"""End-to-end tests of the digit-spectra command line."""

import json

import pytest

import digit_spectra.cli as cli
from digit_spectra.cli import main, parse_args
from digit_spectra.digitcore import BMultFunction
from digit_spectra.report import read_header, read_rows, replay_argv
from digit_spectra.selftest import CheckResult
from digit_spectra.utils import InconsistencyError


def _run(tmp_path, name, *argv):
    path = tmp_path / name
    code = main([*argv, "-o", str(path)])
    return code, path


def test_component(tmp_path):
    code, path = _run(tmp_path, "c.csv", "component", "--base", "2", "--P", "9", "--Q", "25")
    assert code == 0
    assert len(read_rows(path)) == 33
    header = read_header(path)
    assert header["summary"]["i0"] == "0"
    assert header["summary"]["staircase"] == "true"


def test_component_from_primes(tmp_path):
    code, path = _run(tmp_path, "c.csv", "component", "--p", "3", "--q", "5")
    assert code == 0
    assert read_header(path)["config"]["P"] == "9"


def test_parse_args_resolves_function():
    config = parse_args(["mobius-sum", "--preset", "thue-morse", "--n-max", "1e6"])
    assert config.g == BMultFunction.thue_morse()
    assert config.params["N"] == 10**6
    config = parse_args(["mobius-sum", "--g", "b=3;phases=0,1/3,2/3"])
    assert config.g.base == 3


@pytest.mark.parametrize(
    "argv",
    [
        ["mobius-sum", "--no-such-flag"],
        ["component", "--P", "9", "--Q", "24"],
        ["component", "--P", "9"],
        ["mobius-sum", "--g", "b=2;phases=0,3/2"],
        ["mobius-sum", "--n-max", "0"],
        ["twisted-sum", "--theta", "3/2"],
        ["dk-corr", "--p", "3"],
        ["normality", "--block-length", "30"],
        ["mobius-sum", "--block-size", "1"],
        [],
    ],
)
def test_usage_errors_exit_one(argv, capsys):
    assert main(argv) == 1
    assert "[digit-spectra]" in capsys.readouterr().err


def test_runtime_value_error_exits_one(tmp_path):
    code, _ = _run(tmp_path, "d.csv", "dk-corr", "--p", "4", "--q", "5", "--n-max", "100")
    assert code == 1


def test_unwritable_output_exits_one(tmp_path):
    code = main(["component", "--P", "1", "--Q", "3", "-o", str(tmp_path / "no" / "c.csv")])
    assert code == 1


def test_inconsistency_exits_two(monkeypatch, capsys):
    def broken(b, P, Q):
        raise InconsistencyError("closure and sweep disagree")

    monkeypatch.setattr(cli, "build_component", broken)
    assert main(["component", "--P", "9", "--Q", "25"]) == 2
    assert "bug" in capsys.readouterr().err


def test_help_lists_flags(capsys):
    with pytest.raises(SystemExit) as info:
        main(["mobius-sum", "--help"])
    assert info.value.code == 0
    out = capsys.readouterr().out
    for flag in ("--n-max", "--checkpoints", "--threads", "--deterministic", "--seed", "--g"):
        assert flag in out


def test_mobius_sum(tmp_path):
    code, path = _run(
        tmp_path, "m.csv", "mobius-sum", "--n-max", "12", "--checkpoints", "11,12",
        "--g", "b=2;phases=0,0",
    )
    assert code == 0
    rows = read_rows(path)
    assert [r[0] for r in rows] == ["11", "12"]
    assert [float(r[1]) for r in rows] == [-1.0, -2.0]


def test_empty_checkpoints_give_header_only(tmp_path):
    code, path = _run(tmp_path, "m.csv", "mobius-sum", "--n-max", "1000", "--checkpoints=")
    assert code == 0
    assert read_rows(path) == []
    assert read_header(path)["command"] == "mobius-sum"


def test_output_replays_bit_identically(tmp_path):
    code, first = _run(
        tmp_path, "a.csv", "mobius-sum", "--n-max", "30000", "--checkpoints", "1000,30000",
        "--block-size", "4096",
    )
    assert code == 0
    second = tmp_path / "b.csv"
    assert main(replay_argv(read_header(first), str(second))) == 0
    assert read_rows(first) == read_rows(second)


def test_deterministic_output_ignores_threads(tmp_path):
    argv = ["dk-corr", "--p", "3", "--q", "5", "--n-max", "30000", "--block-size", "4096",
            "--deterministic"]
    _, one = _run(tmp_path, "one.csv", *argv, "--threads", "1")
    _, two = _run(tmp_path, "two.csv", *argv, "--threads", "2")
    assert read_rows(one) == read_rows(two)
    assert read_header(one)["config"] == read_header(two)["config"]
    assert "--threads" not in read_header(one)["argv"]


def test_dk_corr_equal_primes(tmp_path):
    code, path = _run(
        tmp_path, "d.csv", "dk-corr", "--p", "3", "--q", "3", "--allow-equal",
        "--n-max", "500", "--checkpoints", "500",
    )
    assert code == 0
    assert float(read_rows(path)[0][1]) == 500.0
    assert main(["dk-corr", "--p", "3", "--q", "3", "--n-max", "500"]) == 1


def test_twisted_sum(tmp_path):
    code, path = _run(
        tmp_path, "t.csv", "twisted-sum", "--p", "3", "--q", "5", "--theta", "1/3",
        "--n-max", "2000",
    )
    assert code == 0
    header = read_header(path)
    assert header["config"]["theta"] == "1/3"
    assert header["summary"]["exact"] == "true"


def test_carry_check(tmp_path):
    code, path = _run(
        tmp_path, "k.csv", "carry-check", "--a", "3", "--lambda", "10", "--rho", "2,3,4"
    )
    assert code == 0
    rows = read_rows(path)
    assert [r[2] for r in rows] == ["2", "3", "4"]
    assert all(int(r[3]) <= 6 * int(r[4]) for r in rows)


def test_normality(tmp_path):
    code, path = _run(tmp_path, "n.csv", "normality", "--n-max", "1000", "--block-length", "2")
    assert code == 0
    rows = read_rows(path)
    assert [r[0] for r in rows] == ["00", "01", "10", "11"]
    assert sum(int(r[1]) for r in rows) == 999


def test_contract_without_certificate(tmp_path):
    code, path = _run(
        tmp_path, "c.json", "contract", "--P", "9", "--Q", "25", "--L-max", "1",
        "--delta-min", "0.999", "--format", "json",
    )
    assert code == 0
    body = json.loads(path.read_text())
    assert body["found"] is False
    assert body["best_grid_sup"] > 0
    assert body["trend"][0]["L"] == 1


def test_contract_periodic_function(tmp_path):
    code, _ = _run(
        tmp_path, "c.json", "contract", "--preset", "alternating-3", "--P", "4", "--Q", "7",
    )
    assert code == 1


@pytest.mark.timeout(300)
def test_selftest(tmp_path):
    code, path = _run(tmp_path, "s.csv", "selftest")
    assert code == 0
    assert all(r[1] == "true" for r in read_rows(path))


def test_selftest_failure_exits_two(monkeypatch, tmp_path):
    failed = [CheckResult("sieve", False, "mismatch")]
    monkeypatch.setattr(cli, "run_selftest", lambda seed: failed)
    code, _ = _run(tmp_path, "s.csv", "selftest")
    assert code == 2


@pytest.mark.integration
@pytest.mark.timeout(900)
def test_fourier_decay(tmp_path):
    code, path = _run(
        tmp_path, "f.csv", "fourier-decay", "--P", "9", "--Q", "25", "--lambda-max", "20",
    )
    assert code == 0
    rows = read_rows(path)
    assert len(rows) == 21
    assert read_header(path)["summary"]["status"] == "PASS"
