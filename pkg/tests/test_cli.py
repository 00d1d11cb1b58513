"""End-to-end CLI tests: exit codes, output files, determinism, formats."""
import csv
import json

import numpy as np
import pytest

from squidring.cli import main
from squidring.observables import TimeSeriesRecord

SHORT_RAMP = [
    "--set", "ramp.t0=30", "--set", "ramp.tr=5", "--set", "ramp.t_end=90",
    "--set", "output.sample_dt=5",
]


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def test_missing_config_file_exits_2(tmp_path, capsys):
    code = main(["ramp", "--config", str(tmp_path / "nope.json")])
    assert code == 2
    assert "config error" in capsys.readouterr().err


def test_unknown_key_exits_2(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"rmap": {}}))
    assert main(["ramp", "--config", str(cfg), "--out", str(tmp_path)]) == 2
    assert "rmap" in capsys.readouterr().err


def test_bad_override_exits_2(tmp_path, capsys):
    assert main(["ramp", "--out", str(tmp_path), "--set", "ramp.t0"]) == 2


def test_ramp_run_outputs(tmp_path, capsys):
    out = tmp_path / "run"
    code = main(["ramp", "--out", str(out)] + SHORT_RAMP)
    assert code == 0
    header, rows = read_csv(out / "ramp.csv")
    assert tuple(header) == TimeSeriesRecord.COLUMNS
    assert len(rows) == 19  # t = 0 .. 90 in steps of 5
    assert float(rows[0][header.index("P_10")]) == pytest.approx(1.0)
    resolved = json.loads((out / "resolved_config.json").read_text())
    assert resolved["ramp"]["t0"] == 30
    summary = (out / "summary.txt").read_text()
    assert "plateau" in summary
    assert "plateau" in capsys.readouterr().out


def test_ramp_determinism(tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(["ramp", "--out", str(out1)] + SHORT_RAMP) == 0
    assert main(["ramp", "--out", str(out2)] + SHORT_RAMP) == 0
    assert (out1 / "ramp.csv").read_bytes() == (out2 / "ramp.csv").read_bytes()


def test_ramp_jsonl_format(tmp_path):
    out = tmp_path / "run"
    assert main(["ramp", "--out", str(out), "--format", "jsonl"] + SHORT_RAMP) == 0
    lines = (out / "ramp.jsonl").read_text().splitlines()
    assert len(lines) == 19
    first = json.loads(lines[0])
    assert set(first) == set(TimeSeriesRecord.COLUMNS)
    assert first["t"] == 0.0


def test_sweep_run_outputs(tmp_path):
    out = tmp_path / "sweep"
    code = main([
        "sweep", "--out", str(out),
        "--set", "sweep.phi_min=0.31", "--set", "sweep.phi_max=0.35",
        "--set", "sweep.points=5", "--set", "sweep.tau=200",
        "--set", "sweep.refine=false",
    ])
    assert code == 0
    header, rows = read_csv(out / "sweep.csv")
    assert header == ["phi_x", "avg_E_e", "avg_E_s", "converged"]
    assert len(rows) == 5
    assert rows[0][0] == "0.31"
    # this window is off resonance, so the field keeps its energy
    assert float(rows[0][1]) == pytest.approx(1.5, abs=0.05)
    assert "no exchange regions detected" in (out / "summary.txt").read_text()


def test_dissipative_zero_damping_matches_ramp(tmp_path):
    out_r, out_d = tmp_path / "ramp", tmp_path / "diss"
    assert main(["ramp", "--out", str(out_r)] + SHORT_RAMP) == 0
    assert main(["dissipative", "--out", str(out_d), "--set", "bath.gamma=0"]
                + SHORT_RAMP) == 0
    h_r, rows_r = read_csv(out_r / "ramp.csv")
    h_d, rows_d = read_csv(out_d / "dissipative_gamma_0.csv")
    assert h_r == h_d
    for col in ("P_10", "P_01", "ent_mag", "E_e"):
        k = h_r.index(col)
        a = np.array([float(r[k]) for r in rows_r])
        b = np.array([float(r[k]) for r in rows_d])
        np.testing.assert_allclose(a, b, atol=1e-6)


def test_dissipative_file_per_rate(tmp_path):
    out = tmp_path / "diss"
    code = main([
        "dissipative", "--out", str(out),
        "--set", "bath.gammas=[1e-5,1e-4]",
        "--set", "ramp.t0=30", "--set", "ramp.tr=5", "--set", "ramp.t_end=90",
        "--set", "output.sample_dt=10",
    ])
    assert code == 0
    assert (out / "dissipative_gamma_1em05.csv").exists()
    assert (out / "dissipative_gamma_0.0001.csv").exists()
    summary = (out / "summary.txt").read_text()
    assert "gamma = 1e-05" in summary and "gamma = 0.0001" in summary


def test_numerical_failure_exits_3(tmp_path, capsys):
    out = tmp_path / "blowup"
    code = main(["ramp", "--out", str(out), "--set", "integrator.dt=5"]
                + SHORT_RAMP)
    assert code == 3
    diag = out / "diagnostic.txt"
    assert diag.exists()
    assert "NormDriftError" in diag.read_text()
    assert "numerical failure" in capsys.readouterr().err


def test_validate_subcommand(tmp_path, capsys):
    out = tmp_path / "val"
    assert main(["validate", "--out", str(out)]) == 0
    summary = (out / "summary.txt").read_text()
    assert "PASS" in summary and "FAIL" not in summary


def test_entry_point_installed():
    import shutil
    assert shutil.which("squidring") is not None
