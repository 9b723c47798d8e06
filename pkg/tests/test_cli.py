import csv
import json
import math

import pytest

from zetamom.cli import (EXIT_OK, EXIT_TOLERANCE, EXIT_USAGE, RunConfig, UsageError, main, parse_config,
                         read_report, write_report)
from zetamom.divisor import CorrelationRecord
from zetamom.empirical import MomentReport
from zetamom.momofmom import AveragingKernel, m22_formula
from zetamom.smoothing import ShiftConfig, Window
from zetamom.spectral import synthetic_dataset


def run_cli(tmp_path, *args, name="run"):
    rc = main(list(args) + ["--output", str(tmp_path), "--name", name])
    return rc, tmp_path / f"{name}.json", tmp_path / f"{name}.csv"


# ---------------------------------------------------------------- parsing

def test_usage_errors(tmp_path, capsys):
    assert main(["divisor", "--X", "100"]) == EXIT_USAGE
    assert "--r" in capsys.readouterr().err
    assert main(["zeta", "--t", "3", "--bogus", "1"]) == EXIT_USAGE
    assert main(["nonsense"]) == EXIT_USAGE
    assert main(["zeta", "--t", "abc"]) == EXIT_USAGE
    assert main(["afe", "--t", "10"]) == EXIT_USAGE
    assert main(["moment", "--T1", "5", "--T2", "1", "--window", "sharp"]) == EXIT_USAGE
    assert main(["moment", "--T1", "100", "--T2", "200", "--window", "hann"]) == EXIT_USAGE
    assert main(["spectral", "--delta", "1", "--T1", "1000", "--T2", "2000", "--Delta", "300",
                 "--fetch-url", "http://example.invalid/x.json"]) == EXIT_USAGE
    assert main(["mom22", "--T", "1e5", "--empirical"]) == EXIT_USAGE


def test_config_file_and_override(tmp_path):
    cfg_file = tmp_path / "c.cfg"
    cfg_file.write_text("# shifts\nT1 = 100\nT2 = 200\nbeta = 3\nworkers = 2\n")
    cfg = parse_config(["moment", "--config", str(cfg_file), "--beta", "5"])
    assert cfg.params["T1"] == 100.0 and cfg.params["beta"] == 5.0 and cfg.workers == 2
    cfg_file.write_text("T1 = 100\nT2 = 200\ncolour = red\n")
    with pytest.raises(UsageError):
        parse_config(["moment", "--config", str(cfg_file)])
    with pytest.raises(UsageError):
        RunConfig("moment", workers=0)


# ---------------------------------------------------------------- pipelines

def test_zeta_first_zero(tmp_path, capsys):
    rc, js, cs = run_cli(tmp_path, "zeta", "--t", "14.1347251417")
    assert rc == EXIT_OK
    data = json.loads(js.read_text())
    assert data["abs"] <= 1e-8
    assert "|zeta| =" in capsys.readouterr().out
    assert cs.exists()


def test_divisor_records(tmp_path):
    rc, js, cs = run_cli(tmp_path, "divisor", "--X", "1000000", "--r", "1,5,42")
    assert rc == EXIT_OK
    recs = read_report(cs)
    assert [r.r for r in recs] == [1, 5, 42]
    assert all(abs(r.normalized_error) <= 50 for r in recs)
    assert json.loads(js.read_text())["records"][0]["sum"] == recs[0].sum


def test_compare_small_range(tmp_path):
    rc, js, _ = run_cli(tmp_path, "compare", "--T1", "100", "--T2", "600", "--alpha", "0", "--beta", "5")
    assert rc == EXIT_OK
    d = json.loads(js.read_text())
    assert set(d) == {"T1", "T2", "shift", "window", "empirical", "main_term", "abs_diff", "rel_diff",
                      "n_evals"}
    assert 0 <= d["rel_diff"] < 0.2


def test_moment_windowed(tmp_path):
    rc, js, _ = run_cli(tmp_path, "moment", "--T1", "100", "--T2", "300", "--window", "gaussian",
                        "--Delta", "5")
    assert rc == EXIT_OK
    d = json.loads(js.read_text())
    assert d["window"]["kind"] == "gaussian-conv" and "main_term" not in d


def test_main_term(tmp_path):
    rc, js, _ = run_cli(tmp_path, "main-term", "--t", "1e6", "--alpha", "0", "--beta", "0")
    assert rc == EXIT_OK
    assert abs(json.loads(js.read_text())["Q2"] - 2631.6075833065) <= 1e-9 * 2631.6


def test_afe(tmp_path):
    rc, js, _ = run_cli(tmp_path, "afe", "--t", "100", "--delta", "0", "--Q", "25")
    assert rc == EXIT_OK
    d = json.loads(js.read_text())
    assert d["rel_err"] <= 1e-5 and d["doubling_change"] <= 1e-6


def test_afe_tolerance_failure(tmp_path, capsys):
    rc, _, _ = run_cli(tmp_path, "afe", "--t", "100", "--Q", "25", "--cutoff-sigma", "0.5")
    assert rc == EXIT_TOLERANCE
    assert "requested" in capsys.readouterr().out


def test_mom22(tmp_path):
    rc, js, cs = run_cli(tmp_path, "mom22", "--T", "1e8", "--c", str(math.pi))
    assert rc == EXIT_OK
    d = json.loads(js.read_text())
    assert abs(d["a_constant"] - 0.46) <= 0.02
    rows = list(csv.reader(open(cs)))
    assert rows[0] == ["T", "c", "kind", "dbar", "odbar", "total", "empirical", "a_constant"]


def test_mom22_empirical(tmp_path):
    rc, js, _ = run_cli(tmp_path, "mom22", "--T", "500", "--empirical", "--tol", "0.5")
    assert rc == EXIT_OK
    assert json.loads(js.read_text())["empirical"] > 0


@pytest.mark.filterwarnings("ignore::zetamom.special.AccuracyWarning")
def test_spectral(tmp_path):
    ds = tmp_path / "ds.json"
    ds.write_text(synthetic_dataset(10, 300, seed=1).to_json())
    rc, js, _ = run_cli(tmp_path, "spectral", "--dataset", str(ds), "--delta", "2", "--T1", "1000",
                        "--T2", "2000", "--Delta", "300", "--y-max", "20")
    assert rc == EXIT_OK
    d = json.loads(js.read_text())
    assert d["dataset"]["entries"] == 10
    assert abs(d["E_c"]["imag_part"]) <= 1e-10


# ---------------------------------------------------------------- serialisation

def test_write_report_deterministic(tmp_path):
    rep = MomentReport(1.0, 2.0, ShiftConfig(0.0, 0.1), Window("bump", 1.0, 2.0, 0.3), 1 / 3, 0.3)
    write_report(rep, tmp_path / "a.json")
    write_report(rep, tmp_path / "b.json")
    a = (tmp_path / "a.json").read_bytes()
    assert a == (tmp_path / "b.json").read_bytes() and a.endswith(b"\n")
    back = read_report(tmp_path / "a.json")
    assert back["empirical"] == 1 / 3 and back["shift"] == {"alpha": 0.0, "beta": 0.1}


def test_write_report_mom(tmp_path):
    rep = m22_formula(1e6, AveragingKernel())
    write_report(rep, tmp_path / "m.json")
    assert read_report(tmp_path / "m.json")["formula_total"] == rep.formula_total


def test_write_report_records_round_trip(tmp_path):
    recs = [CorrelationRecord(10, 1, 74, 70.123456789012345, 3.876543210987655, 0.1 + 0.2)]
    write_report(recs, tmp_path / "r.csv")
    assert read_report(tmp_path / "r.csv") == recs
    write_report([], tmp_path / "e.csv")
    assert (tmp_path / "e.csv").read_text() == "X,r,sum,main,error,normalized_error\n"
    assert read_report(tmp_path / "e.csv") == []


def test_identical_runs_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert main(["divisor", "--X", "20000", "--r", "3,4", "--output", str(d)]) == EXIT_OK
    for f in ("divisor.json", "divisor.csv"):
        assert (a / f).read_bytes() == (b / f).read_bytes()


def test_workers_do_not_change_results(tmp_path):
    out = {}
    for w in ("1", "8"):
        rc, js, _ = run_cli(tmp_path, "moment", "--T1", "100", "--T2", "400", "--beta", "2",
                            "--workers", w, name=f"w{w}")
        assert rc == EXIT_OK
        out[w] = json.loads(js.read_text())["empirical"]
    assert abs(out["1"] - out["8"]) <= 1e-12 * abs(out["1"])
