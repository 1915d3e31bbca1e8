import json
import subprocess
import sys
import time

import numpy as np
import pytest

from factorreg.cli import main, validate_config
from factorreg.exceptions import ConfigError, ParseError
from factorreg.io import read_panel, write_panel


@pytest.fixture
def sim_dir(tmp_path):
    out = tmp_path / "sim"
    assert main(["simulate", "--p", "10", "--T", "50", "--seed", "3", "--out-dir", str(out)]) == 0
    return out


def test_simulate_files(sim_dir):
    assert sorted(p.name for p in sim_dir.iterdir()) == ["truth.json", "y.csv", "z.csv"]
    Y, names = read_panel(sim_dir / "y.csv")
    assert Y.shape == (50, 10) and names is None
    truth = json.loads((sim_dir / "truth.json").read_text())
    assert np.array(truth["B"]).shape == (10, 5)
    assert np.array(truth["L1"]).shape == (10, 3)
    assert truth["scenario"]["seed"] == 3


def test_simulate_byte_identical(sim_dir, tmp_path):
    again = tmp_path / "again"
    main(["simulate", "--p", "10", "--T", "50", "--seed", "3", "--out-dir", str(again)])
    for name in ("y.csv", "z.csv", "truth.json"):
        assert (sim_dir / name).read_bytes() == (again / name).read_bytes()


def test_csv_round_trip_is_exact(tmp_path, rng):
    X = rng.standard_normal((7, 3)) * 10.0 ** rng.integers(-300, 300, (7, 3))
    write_panel(tmp_path / "x.csv", X, "x")
    back, names = read_panel(tmp_path / "x.csv", header=True)
    assert names == ["x1", "x2", "x3"]
    assert np.array_equal(back, X)


def test_fit_outputs_and_residuals(sim_dir, tmp_path):
    out = tmp_path / "fit"
    args = ["fit", "--y", str(sim_dir / "y.csv"), "--z", str(sim_dir / "z.csv")]
    assert main(args + ["--truth", str(sim_dir / "truth.json"), "--out-dir", str(out)]) == 0
    for name in ("fit.json", "Bhat.csv", "A1hat.csv", "xhat.csv", "residuals.csv"):
        assert (out / name).exists()
    Y, _ = read_panel(sim_dir / "y.csv")
    Z, _ = read_panel(sim_dir / "z.csv")
    Bhat, _ = read_panel(out / "Bhat.csv")
    E, _ = read_panel(out / "residuals.csv")
    assert np.allclose(E, Y - Z @ Bhat.T, atol=1e-10)
    report = json.loads((out / "fit.json").read_text())
    assert report["rhat"] == len(report["decisions"]) - 1
    assert set(report["score"]) == {"r", "rhat_correct", "b_error", "dbar"}
    assert report["score"]["r"] == 3


def test_fit_forced_r(sim_dir, tmp_path):
    out = tmp_path / "fit"
    args = ["fit", "--y", str(sim_dir / "y.csv"), "--z", str(sim_dir / "z.csv"), "--r", "3"]
    assert main(args + ["--out-dir", str(out)]) == 0
    report = json.loads((out / "fit.json").read_text())
    assert report["rhat"] == 3 and report["decisions"] == [] and report["r_forced"]
    assert read_panel(out / "A1hat.csv")[0].shape == (10, 3)


def test_fit_recovers_r_on_larger_panel(tmp_path):
    sim = tmp_path / "sim"
    main(["simulate", "--p", "30", "--T", "400", "--seed", "5", "--out-dir", str(sim)])
    out = tmp_path / "fit"
    main(["fit", "--y", str(sim / "y.csv"), "--z", str(sim / "z.csv"), "--truth", str(sim / "truth.json"), "--out-dir", str(out)])
    score = json.loads((out / "fit.json").read_text())["score"]
    assert score["rhat_correct"] and score["dbar"] < 0.4


def test_header_flag(tmp_path):
    sim = tmp_path / "sim"
    main(["simulate", "--p", "8", "--T", "60", "--header", "--out-dir", str(sim)])
    Y, names = read_panel(sim / "y.csv", header=True)
    assert names[0] == "y1" and Y.shape == (60, 8)
    out = tmp_path / "fit"
    assert main(["fit", "--header", "--y", str(sim / "y.csv"), "--z", str(sim / "z.csv"), "--out-dir", str(out)]) == 0


def test_ragged_csv(tmp_path, capsys):
    bad = tmp_path / "y.csv"
    bad.write_text("1,2,3\n4,5,6\n7,8\n")
    with pytest.raises(ParseError, match="row 3"):
        read_panel(bad)
    z = tmp_path / "z.csv"
    z.write_text("1\n2\n3\n")
    assert main(["fit", "--y", str(bad), "--z", str(z), "--out-dir", str(tmp_path)]) == 1
    assert "ParseError" in capsys.readouterr().err


def test_row_mismatch(sim_dir, tmp_path, capsys):
    Z, _ = read_panel(sim_dir / "z.csv")
    write_panel(tmp_path / "z.csv", Z[:-1])
    code = main(["fit", "--y", str(sim_dir / "y.csv"), "--z", str(tmp_path / "z.csv"), "--out-dir", str(tmp_path)])
    assert code == 1 and "DimensionError" in capsys.readouterr().err


def test_config_validation(tmp_path, capsys):
    with pytest.raises(ConfigError):
        validate_config({"seeed": 1})
    with pytest.raises(ConfigError):
        validate_config({"scenario": {"p": 10, "colour": "red"}})
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"scenario": {"p": 12, "T": 40}, "seed": 9}))
    out = tmp_path / "sim"
    assert main(["simulate", "--config", str(cfg), "--T", "45", "--out-dir", str(out)]) == 0
    assert read_panel(out / "y.csv")[0].shape == (45, 12)  # flag beats config
    assert json.loads((out / "truth.json").read_text())["seed"] == 9
    cfg.write_text(json.dumps({"bogus": 1}))
    assert main(["simulate", "--config", str(cfg), "--out-dir", str(out)]) == 1
    assert "unknown config keys" in capsys.readouterr().err


def test_forecast_outputs(tmp_path):
    sim = tmp_path / "sim"
    main(["simulate", "--p", "15", "--T", "120", "--seed", "2", "--out-dir", str(sim)])
    out = tmp_path / "fc"
    args = ["forecast", "--y", str(sim / "y.csv"), "--z", str(sim / "z.csv"), "--T0", "10", "--out-dir", str(out)]
    assert main(args) == 0
    fe = json.loads((out / "fe.json").read_text())
    assert list(fe) == ["T0", "origins", "fe_with_factors", "fe_regression_only", "rhat", "n_failures", "failures"]
    assert fe["origins"] == list(range(110, 120)) and fe["n_failures"] == 0
    table, _ = read_panel(out / "forecasts.csv")
    assert table.shape == (10, 30)
    first = (out / "fe.json").read_bytes()
    main(args)
    assert (out / "fe.json").read_bytes() == first


def test_forecast_no_dynamics(tmp_path, rng):
    T, p = 150, 12
    z = rng.standard_normal((T, 2))
    y = z @ rng.uniform(1, 2, (p, 2)).T + rng.standard_normal((T, p))
    write_panel(tmp_path / "y.csv", y)
    write_panel(tmp_path / "z.csv", z)
    out = tmp_path / "fc"
    main(["forecast", "--y", str(tmp_path / "y.csv"), "--z", str(tmp_path / "z.csv"), "--T0", "20", "--out-dir", str(out)])
    fe = json.loads((out / "fe.json").read_text())
    assert abs(fe["fe_with_factors"] / fe["fe_regression_only"] - 1) <= 0.05


def test_forecast_bad_T0(sim_dir, tmp_path, capsys):
    args = ["forecast", "--y", str(sim_dir / "y.csv"), "--z", str(sim_dir / "z.csv"), "--T0", "40"]
    assert main(args + ["--out-dir", str(tmp_path)]) == 1
    assert "ConfigError" in capsys.readouterr().err


def test_replicate_smoke(tmp_path):
    out = tmp_path / "rep"
    start = time.perf_counter()
    code = main(["replicate", "--n-reps", "2", "--p", "50", "--T", "300", "--deltas", "0,0", "0.4,0.5", "--out-dir", str(out)])
    assert code == 0 and time.perf_counter() - start < 60
    lines = (out / "table.csv").read_text().splitlines()
    assert lines[0] == "delta1,delta2,p,T=300"
    assert lines[1].startswith("0.0,0.0,50,") and lines[2].startswith("0.4,0.5,50,")
    summary = json.loads((out / "summary.json").read_text())
    assert len(summary["cells"]) == 2 and summary["cells"][0]["n_reps"] == 2


def test_module_entry_point(tmp_path):
    out = tmp_path / "sim"
    proc = subprocess.run(
        [sys.executable, "-m", "factorreg", "simulate", "--p", "6", "--T", "30", "--r", "1", "--out-dir", str(out)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert (out / "y.csv").exists()
