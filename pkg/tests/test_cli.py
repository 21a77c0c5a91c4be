import csv
import json

import numpy as np
import pytest

from scheds.cli import main
from scheds.cone import dump_program
from scheds.features import synthetic_daily_weather

from socp_cases import analytic_cases


def _write_csv(path, names, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(names)
        w.writerows(rows)
    return str(path)


@pytest.fixture
def linear_csv(tmp_path):
    rng = np.random.default_rng(0)
    T, p = 80, 6
    X = rng.normal(size=(T, p))
    y = 2 * X[:, 0] - X[:, 3] + 0.5 * rng.normal(size=T)
    names = ["y"] + [f"x{j}" for j in range(p)]
    return _write_csv(tmp_path / "d.csv", names, np.column_stack([y, X]).tolist())


COVS = "x0,x1,x2,x3,x4,x5"


def _read_rows(path):
    with open(path) as fh:
        return list(csv.reader(line for line in fh if not line.startswith("#")))


def test_fit_writes_outputs(tmp_path, linear_csv):
    out = tmp_path / "o"
    assert main(["fit", "--data", linear_csv, "--response", "y", "--covariates", COVS,
                 "--out", str(out), "--bias-correct"]) == 0
    model = json.loads((out / "model.json").read_text())
    assert model["optimal"] and model["stage"] == 2
    assert {0, 3} <= set(model["selected_groups"])
    assert (out / "slacks.json").exists() and (out / "saturation.json").exists()
    cfg = json.loads((out / "config.json").read_text())
    assert cfg["config"]["response"] == "y" and "numpy" in cfg["versions"]


def test_fit_malformed_csv(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("y,x0\n1,2\n3,oops\n")
    assert main(["fit", "--data", str(bad), "--response", "y", "--covariates", "x0",
                 "--out", str(tmp_path / "o")]) == 1


def test_fit_max_iter_partial(tmp_path, linear_csv):
    out = tmp_path / "o"
    assert main(["fit", "--data", linear_csv, "--response", "y", "--covariates", COVS,
                 "--out", str(out), "--max-iter", "1"]) == 2
    assert json.loads((out / "model.json").read_text())["optimal"] is False


def test_config_precedence(tmp_path, linear_csv):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"data": linear_csv, "response": "y", "covariates": ["x0", "x1"],
                               "lambda0": 5.0}))
    out = tmp_path / "o"
    assert main(["fit", "--config", str(cfg), "--lambda0", "1.5", "--out", str(out)]) == 0
    resolved = json.loads((out / "config.json").read_text())["config"]
    assert resolved["lambda0"] == 1.5 and resolved["covariates"] == ["x0", "x1"]
    assert resolved["lambda_mode"] == "scaled_sqrt_rank"


def test_unknown_config_key(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text('{"colour": 1}')
    assert main(["bench", "--config", str(cfg), "--out", str(tmp_path)]) == 1


def test_unknown_flag_rejected(tmp_path):
    with pytest.raises(SystemExit):
        main(["fit", "--bogus", "1"])


def test_output_dir_from_environment(tmp_path, linear_csv, monkeypatch):
    monkeypatch.setenv("SCHEDS_OUTPUT_DIR", str(tmp_path / "env"))
    assert main(["fit", "--data", linear_csv, "--response", "y", "--covariates", COVS]) == 0
    assert (tmp_path / "env" / "model.json").exists()


def test_predict_rows_and_zero_model(tmp_path, linear_csv):
    out = tmp_path / "o"
    main(["fit", "--data", linear_csv, "--response", "y", "--covariates", COVS, "--out", str(out)])
    model = json.loads((out / "model.json").read_text())
    model["phi_hat"] = [0.0] * 6
    (out / "zero.json").write_text(json.dumps(model))
    one = _write_csv(tmp_path / "one.csv", COVS.split(","), [[0.1, 0.2, 0.3, 0.4, 0.5, 0.6]])
    assert main(["predict", "--model", str(out / "zero.json"), "--data", one, "--out", str(out)]) == 0
    rows = _read_rows(out / "predictions.csv")
    assert rows[0] == ["t", "y_hat", "sigma_hat"]
    assert len(rows) == 2 and float(rows[1][1]) == 0.0


def test_predict_covariate_mismatch(tmp_path, linear_csv):
    out = tmp_path / "o"
    main(["fit", "--data", linear_csv, "--response", "y", "--covariates", COVS, "--out", str(out)])
    short = _write_csv(tmp_path / "s.csv", ["x0", "x1"], [[1, 2]])
    assert main(["predict", "--model", str(out / "model.json"), "--data", short, "--out", str(out)]) == 1


def test_diagnose_with_gre(tmp_path, linear_csv):
    out = tmp_path / "o"
    main(["fit", "--data", linear_csv, "--response", "y", "--covariates", COVS, "--out", str(out)])
    assert main(["diagnose", "--model", str(out / "model.json"), "--data", linear_csv,
                 "--gre", "--N", "2", "--budget", "10", "--out", str(out)]) == 0
    d = json.loads((out / "diagnostics.json").read_text())
    assert 0 <= d["ks"]["p_value"] <= 1
    assert d["gre"]["enumerated"] and d["gre"]["subsets_checked"] == 21
    assert set(d["constants_plugin"]) == {"C1", "C2", "C3", "C4"}
    rows = _read_rows(out / "plot_series.csv")
    assert rows[0] == ["t", "observed", "mean_hat", "sigma_hat"] and len(rows) == 81


def test_diagnose_too_few_rows(tmp_path, linear_csv):
    out = tmp_path / "o"
    main(["fit", "--data", linear_csv, "--response", "y", "--covariates", COVS, "--out", str(out)])
    rows = _read_rows(linear_csv)
    small = _write_csv(tmp_path / "small.csv", rows[0], rows[1:4])
    assert main(["diagnose", "--model", str(out / "model.json"), "--data", small, "--out", str(out)]) == 1


def test_bench_single_row_deterministic(tmp_path):
    args = ["bench", "--T", "40", "--p", "20", "--s", "2", "--sigma", "0.5", "--trials", "1", "--seed", "3"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    a = (tmp_path / "a" / "bench_40_20_2_0.5.csv").read_bytes()
    assert a == (tmp_path / "b" / "bench_40_20_2_0.5.csv").read_bytes()
    rows = _read_rows(tmp_path / "a" / "bench_40_20_2_0.5.csv")
    assert [r[4] for r in rows[1:]] == ["ScHeDs", "SqrtLasso"]


def test_bench_needs_settings(tmp_path):
    assert main(["bench", "--T", "40", "--out", str(tmp_path)]) == 1


def test_socp_solve(tmp_path):
    name, prog, ref = analytic_cases()[0]
    path = tmp_path / "p.txt"
    dump_program(prog, path)
    assert main(["socp-solve", str(path), "--out", str(tmp_path)]) == 0
    sol = json.loads((tmp_path / "solution.json").read_text())
    assert sol["objective"] == pytest.approx(ref, abs=1e-6)
    assert main(["socp-solve", str(path), "--max-iter", "1", "--out", str(tmp_path)]) == 2
    assert main(["socp-solve", str(tmp_path / "missing.txt"), "--out", str(tmp_path)]) == 1


@pytest.mark.slow
def test_temperature_recipe(tmp_path):
    temp, tmax, tmin, wind = synthetic_daily_weather(400, seed=2)
    data = _write_csv(tmp_path / "w.csv", ["temp", "max", "min", "wind"],
                      np.column_stack([temp, tmax, tmin, wind]).tolist())
    out = tmp_path / "o"
    assert main(["fit", "--recipe", "temperature", "--data", data, "--out", str(out)]) == 0
    assert main(["predict", "--model", str(out / "model.json"), "--data", data, "--out", str(out)]) == 0
    assert main(["diagnose", "--model", str(out / "model.json"), "--data", data, "--out", str(out)]) == 0
    with open(out / "model.json") as fh:
        model = json.load(fh)
    assert model["optimal"] is True
    assert (out / "predictions.csv").exists() and (out / "diagnostics.json").exists()
