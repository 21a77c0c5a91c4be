import numpy as np
import pytest

from scheds.synth import TABLE1_CONFIGS, BenchReport, SynthConfig, generate, run_benchmark, run_trial, \
    timing_profile


def test_generate_block_before_permutation():
    cfg = SynthConfig(10, 5, 2, 1.0)
    _, _, beta, _, support = generate(cfg, 0)
    assert sorted(beta.tolist()) == [0.0, 0.0, 0.0, 1.0, 1.0]
    assert support.size == 2


def test_phi_is_beta_over_sigma():
    _, _, beta, phi, _ = generate(SynthConfig(10, 5, 3, 2.0), 0)
    np.testing.assert_allclose(phi[beta == 1.0], 0.5)


def test_noise_variance():
    cfg = SynthConfig(10_000, 3, 1, 0.7)
    X, Y, beta, _, _ = generate(cfg, 0)
    assert np.var(Y - X @ beta, ddof=1) == pytest.approx(0.49, rel=0.05)


def test_trial_streams_independent_of_order():
    cfg = SynthConfig(20, 10, 2, 0.5, seed=9)
    a = generate(cfg, 3)
    generate(cfg, 1)
    b = generate(cfg, 3)
    np.testing.assert_array_equal(a[1], b[1])
    assert not np.array_equal(generate(cfg, 4)[1], a[1])


def test_config_validation():
    with pytest.raises(ValueError):
        SynthConfig(10, 5, 6, 1.0)
    with pytest.raises(ValueError):
        SynthConfig(10, 5, 2, 0.0)
    assert SynthConfig(100, 100, 2, 0.5).key == "100_100_2_0.5"


def test_table1_has_nine_settings():
    assert len(TABLE1_CONFIGS) == 9
    assert TABLE1_CONFIGS[0] == (100, 100, 2, 0.5)


def test_single_trial_report():
    cfg = SynthConfig(60, 30, 2, 0.5, trials=1, seed=1)
    rep = run_benchmark([cfg])
    rec = run_trial(cfg, 0)
    for m, r in zip(("ScHeDs", "SqrtLasso"), rec):
        row = rep.summary[cfg.key][m]
        assert row["beta_err_mean"] == pytest.approx(r["beta_err"])
        assert row["beta_err_std"] == 0.0
        assert row["failed"] == 0


def test_parallel_matches_serial(tmp_path):
    cfg = SynthConfig(50, 20, 2, 0.5, trials=4, seed=2)
    a = run_benchmark([cfg], n_jobs=1)
    b = run_benchmark([cfg], n_jobs=2)
    strip = lambda recs: [{k: v for k, v in r.items() if k != "seconds"} for r in recs]
    assert strip(a.records) == strip(b.records)
    pa = a.write_csv(tmp_path / "a")
    pb = b.write_csv(tmp_path / "b")
    assert open(pa[0]).read() == open(pb[0]).read()


def test_failure_fraction_flag():
    cfg = SynthConfig(10, 5, 1, 1.0, trials=2)
    recs = [{"config": cfg.key, "method": "ScHeDs", "status": "failed", "seconds": 0.0},
            {"config": cfg.key, "method": "ScHeDs", "status": "ok", "seconds": 0.0,
             "beta_err": 0.1, "s_err": 0.0, "sigma_err10": 0.2}]
    rep = BenchReport([cfg], recs, {})
    assert rep.failed
    assert rep.summary[cfg.key]["ScHeDs"]["failed"] == 1


def test_report_json(tmp_path):
    cfg = SynthConfig(40, 10, 1, 0.5, trials=1)
    rep = run_benchmark([cfg], methods=("ScHeDs",))
    path = tmp_path / "r.json"
    rep.write_json(path, {"seed": 0})
    import json
    d = json.loads(path.read_text())
    assert d["provenance"] == {"seed": 0}
    assert "ScHeDs" in d["summary"][cfg.key]


def test_unknown_method():
    with pytest.raises(ValueError):
        run_benchmark([SynthConfig(10, 5, 1, 1.0, trials=1)], methods=("Lasso",))


def test_timing_single_row():
    rows = timing_profile([20], T=30, ip_iters=2, ofo_iters=10)
    assert len(rows) == 1
    assert rows[0]["interior_point_iterations"] <= 2
    assert rows[0]["first_order_seconds_per_iteration"] > 0
