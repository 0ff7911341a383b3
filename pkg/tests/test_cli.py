import csv
import subprocess
import sys

import pytest

from cvarsens.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_selftest(capsys):
    code, out, _ = run(capsys, "selftest")
    assert code == 0 and "FAIL" not in out


def test_run_writes_csvs(capsys, tmp_path):
    code, out, _ = run(capsys, "run", "--config", "case1.cfg", "--out", str(tmp_path), "--threads", "2",
                       "--set", "study.m_min=8", "--set", "study.m_max=11", "--set", "study.R=6",
                       "--set", "benchmark.m=14", "--set", "benchmark.R=5")
    assert code == 0
    with open(tmp_path / "case1_errors.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert {r["method"] for r in rows} == {"mc", "rqmc-linear", "rqmc2-linear"}
    assert all(r["rep_count"] == "6" for r in rows)
    rmse = {(r["method"], int(r["m"])): float(r["rmse"]) for r in rows}
    assert rmse[("rqmc-linear", 11)] < rmse[("mc", 11)]
    assert (tmp_path / "case1_slopes.csv").read_text().startswith("method,metric,slope,intercept,r2")
    assert "wrote" in out


def test_bench_single_asset(capsys):
    code, out, _ = run(capsys, "bench", "--config", "case1.cfg", "--set", "benchmark.m=14",
                       "--set", "benchmark.R=10")
    assert code == 0
    value = float(out.split(":")[1].split("+/-")[0])
    assert abs(value - (-0.1337)) < 1e-3
    assert "published -0.1337" in out


def test_bench_portfolio_b(capsys):
    code, out, _ = run(capsys, "bench", "--config", "portfolioB.cfg", "--set", "benchmark.m=14",
                       "--set", "benchmark.R=10")
    assert code == 0
    value = float(out.split(":")[1].split("+/-")[0])
    assert abs(value - 15.1564) < 0.1


def test_bench_degenerate_has_zero_se(capsys, tmp_path):
    cfg = tmp_path / "flat.cfg"
    cfg.write_text("[model]\ntype = single-asset\nname = flat\nsigma = 0\ntheta = r\n"
                   "[benchmark]\nmethod = rqmc-linear\nm = 8\nR = 4\n")
    code, out, _ = run(capsys, "bench", "--config", str(cfg))
    assert code == 0 and "+/- 0 " in out


def test_missing_config_is_usage_error(capsys):
    code, _, err = run(capsys, "run", "--config", "nope.cfg")
    assert code == 2 and "nope.cfg" in err
    code, _, _ = run(capsys, "bench")
    assert code == 2


def test_bad_value_reports_line(capsys, tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("[model]\ntype = single-asset\nsigma = x\n")
    code, _, err = run(capsys, "bench", "--config", str(cfg))
    assert code == 2 and "bad.cfg:3:" in err


def test_unknown_subcommand(capsys):
    code, _, _ = run(capsys, "frobnicate")
    assert code == 2


@pytest.mark.parametrize("scheme", ["linear", "nested"])
def test_check_net_passes(capsys, scheme):
    code, out, _ = run(capsys, "check-net", "--m", "6", "--d", "2", "--scheme", scheme, "--seeds", "5",
                       "--quiet")
    assert code == 0 and "5/5" in out


def test_check_net_detects_mc(capsys):
    code, out, _ = run(capsys, "check-net", "--m", "6", "--d", "2", "--scheme", "mc", "--seeds", "3")
    assert code == 1 and "FAIL" in out


def test_check_net_refuses_unknown_t(capsys):
    code, _, err = run(capsys, "check-net", "--m", "6", "--d", "3")
    assert code == 2 and "--t" in err
    code, _, _ = run(capsys, "check-net", "--m", "6", "--d", "3", "--t", "6", "--seeds", "2", "--quiet")
    assert code == 0


def test_tie_census(capsys):
    code, out, _ = run(capsys, "tie-census", "--config", "case2.cfg", "--m", "12", "--seeds", "3")
    assert code == 0 and "max tie multiplicity 1" in out


def test_capability_error_exit_code(capsys):
    code, _, err = run(capsys, "run", "--config", "portfolioA.cfg", "--set", "study.methods=rqmc2-linear")
    assert code == 2 and "closed-form" in err


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "cvarsens", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.strip()
