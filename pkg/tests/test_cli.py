import csv
import subprocess
import sys

import pytest

from qmcar import cli, experiments
from qmcar.experiments import ExperimentConfig


def test_parse_m_range():
    assert cli.parse_m_range("9..14") == (9, 10, 11, 12, 13, 14)
    assert cli.parse_m_range("7") == (7,)
    for bad in ("14..9", "a..b", "0..3", ""):
        with pytest.raises(Exception):
            cli.parse_m_range(bad)


def test_config_defaults_and_validation():
    c = ExperimentConfig("example1")
    assert c.m_range == tuple(range(9, 15)) and c.grid_m == 5
    assert ExperimentConfig("example2").grid_m == 10
    assert ExperimentConfig("example3").m_range == tuple(range(8, 17))
    assert ExperimentConfig("example1", seed=3, runs=2).seeds == [3, 4]
    with pytest.raises(ValueError):
        ExperimentConfig("example9")
    with pytest.raises(ValueError):
        ExperimentConfig("example1", m_range=(10, 9))


def test_single_m_has_no_fit():
    res = experiments.run(ExperimentConfig("example1", m_range=(9,), runs=2))
    assert res.fits == {}
    assert [r.sampler for r in res.rows if r.seed is None] == ["DAR_CUBE"]
    assert len(res.rows) == 3


def test_example3_csv_and_sidecar(tmp_path):
    out = tmp_path / "e3.csv"
    rc = cli.main(["example3", "--m-range", "8..11", "--runs", "3", "--out", str(out), "--plot-data"])
    assert rc in (0, 2)
    rows = list(csv.DictReader(out.open()))
    assert list(rows[0]) == list(experiments.CSV_HEADER)
    assert {r["sampler"] for r in rows} == {"DRAR", "DRAR_RANDOM"}
    assert len(rows) == 4 * (1 + 3)
    for r in rows:
        assert int(r["N"]) <= int(r["M"])
        assert float(r["discrepancy_lower"]) <= float(r["discrepancy_upper"])
    side = (tmp_path / "e3.csv.slopes.txt").read_text()
    assert "# m_range=8..11" in side and "DRAR," in side
    assert (tmp_path / "e3.csv.plot.csv").read_text().startswith("sampler,log_N,log_D")


def test_fit_recomputes_sidecar_slopes(tmp_path):
    out = tmp_path / "e3.csv"
    cli.main(["example3", "--m-range", "8..12", "--runs", "2", "--out", str(out)])
    fits = cli.fit_csv(out)
    side = {line.split(",")[0]: float(line.split(",")[1])
            for line in (tmp_path / "e3.csv.slopes.txt").read_text().splitlines()
            if line and not line.startswith(("#", "sampler"))}
    for (exp, sampler), f in fits.items():
        assert exp == "example3"
        assert f.slope == side[sampler]
    fit_out = tmp_path / "fit.txt"
    assert cli.main(["fit", str(out), "--out", str(fit_out)]) == 0
    assert fit_out.read_text().startswith("experiment,sampler,slope")


def test_example1_rows_carry_provenance(tmp_path):
    out = tmp_path / "e1.csv"
    cli.main(["example1", "--m-range", "9..10", "--runs", "2", "--out", str(out)])
    rows = list(csv.DictReader(out.open()))
    dar = [r for r in rows if r["sampler"] == "DAR_CUBE"]
    rar = [r for r in rows if r["sampler"] == "RAR"]
    assert [r["m"] for r in dar] == ["9", "10"]
    assert all(r["seed"] == "" for r in dar)
    assert [r["seed"] for r in rar] == ["0", "1", "0", "1"]
    # baselines are run at the same requested size as DAR produced
    for r in rar:
        assert r["N"] == next(d["N"] for d in dar if d["m"] == r["m"])
    for r in rows:
        lo, hi, d = (float(r[k]) for k in ("discrepancy_lower", "discrepancy_upper", "delta"))
        assert lo <= hi <= min(1.0, lo + d) + 1e-15
        assert r["grid_m"] == "5"


def test_budget_warning_rows(tmp_path):
    out = tmp_path / "b.csv"
    rc = cli.main(["example1", "--m-range", "9", "--grid", "9", "--runs", "1", "--out", str(out)])
    assert rc == cli.EXIT_CHECK
    rows = list(csv.DictReader(out.open()))
    assert {r["sampler"] for r in rows} == {"WARNING_BUDGET:DAR_CUBE", "WARNING_BUDGET:RAR"}
    assert all(r["discrepancy_lower"] == "" for r in rows)


def test_net_audit_small(tmp_path):
    out = tmp_path / "a.csv"
    rc = cli.main(["net-audit", "--m-range", "6..7", "--s-range", "1..2", "--trials", "100", "--out", str(out),
                   "--plot-data"])
    assert rc == 0
    assert (tmp_path / "a.csv.plot.csv").read_text().startswith("s,m,log_M,log_estimate,log_bound")
    rows = list(csv.DictReader(out.open()))
    assert list(rows[0]) == list(experiments.AUDIT_HEADER)
    assert all(r["t"] == "0" and r["pass"] == "true" for r in rows)


def test_net_audit_fixtures():
    for s in (2, 3):
        row = experiments.audit_row(s, 10, 10 ** 4)
        assert row.passed
    assert experiments.audit_row(3, 10, 10).t == 1


def test_error_exit_codes(tmp_path):
    assert cli.main(["net-audit", "--s-range", "6", "--m-range", "4", "--out", str(tmp_path / "x.csv")]) == 1
    with pytest.raises(SystemExit) as info:
        cli.main(["example1", "--m-range", "9..8"])
    assert info.value.code == 1
    assert cli.main(["fit", str(tmp_path / "missing.csv")]) == 1


def test_module_entry_point(tmp_path):
    out = tmp_path / "m.csv"
    proc = subprocess.run([sys.executable, "-m", "qmcar", "example3", "--m-range", "8..10", "--runs", "1",
                           "--out", str(out)], capture_output=True, text=True)
    assert proc.returncode in (0, 2)
    assert out.read_text().startswith(",".join(experiments.CSV_HEADER))


def test_rerun_is_byte_identical(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for p in (a, b):
        cli.main(["example2", "--m-range", "9..10", "--runs", "2", "--out", str(p)])
    assert a.read_bytes() == b.read_bytes()
    assert (tmp_path / "a.csv.slopes.txt").read_bytes() == (tmp_path / "b.csv.slopes.txt").read_bytes()
