"""Acceptance suite: one test per criterion, each printing a pass/fail line."""

import time

import numpy as np
import pytest

from scheds.cone import SolverConfig, solve
from scheds.diagnostics import ks_test, oracle_frequency
from scheds.estimator import ScHeDsProblem, fit, predict, saturation_residual
from scheds.features import (build_temperature_design, build_variance_dictionary, synthetic_daily_weather,
                             temperature_covariates)
from scheds.model import GroupPartition, RegressionData, normalize_columns
from scheds.synth import SynthConfig, run_benchmark, timing_profile

from socp_cases import analytic_cases, random_program


def _gaussian(T, p, seed, amplitude=1.0, sigma=0.5, s=2):
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, 2024])))
    X = rng.standard_normal((T, p))
    beta = np.zeros(p)
    beta[:s] = amplitude
    Y = X @ beta + sigma * rng.standard_normal(T)
    Xs, sc = normalize_columns(X)
    return RegressionData(Xs, Y, np.ones((T, 1)), GroupPartition.singletons(p), sc)


def test_c01_analytic_suite(criterion):
    cases = analytic_cases()
    t0 = time.perf_counter()
    errs = [abs(solve(prog).objective - ref) for _, prog, ref in cases]
    elapsed = time.perf_counter() - t0
    ok = len(cases) >= 10 and max(errs) <= 1e-6 and elapsed < 5.0
    criterion(1, ok, f"{len(cases)} cases, max |err| {max(errs):.1e} (<= 1e-6), {elapsed:.2f} s (< 5 s)")
    assert ok


def test_c02_ip_ofo_agreement(criterion):
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(50):
        n = int(rng.integers(1, 21))
        dims = tuple(int(d) for d in rng.integers(1, 8, size=rng.integers(0, 6)))
        prog = random_program(rng, n=n, n_lin=int(rng.integers(0, 5)), dims=dims)
        ip, ofo = solve(prog), solve(prog, SolverConfig("ofo"))
        assert ip.optimal
        rel = abs(ip.objective - ofo.objective) / max(abs(ip.objective), 1e-12)
        worst = max(worst, rel if ofo.optimal else np.inf)
    ok = worst <= 1e-3
    criterion(2, ok, f"50 random SOCPs, max relative objective gap {worst:.1e} (<= 1e-3)")
    assert ok


def test_c03_saturation(criterion):
    sat, rot = 0.0, np.inf
    for seed in range(20):
        problem = ScHeDsProblem.build(_gaussian(50, 20, seed))
        est = fit(problem)
        sat = max(sat, float(np.abs(saturation_residual(problem, est, relative=True)).max()))
        rot = min(rot, float(np.min(est.v_hat * (problem.data.R @ est.alpha_hat))))
    ok = sat <= 1e-4 and rot >= 1 - 1e-6
    criterion(3, ok, f"20 fits, max relative saturation {sat:.1e} (<= 1e-4), min v*R.alpha {rot:.8f}")
    assert ok


def test_c04_oracle_triple(criterion):
    T, p = 200, 50
    phi = np.zeros(p)
    phi[:2] = 0.5

    def make(i):
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([11, i])))
        X = rng.standard_normal((T, p))
        Y = X @ phi + rng.standard_normal(T)
        return RegressionData(X, Y, np.ones((T, 1)), GroupPartition.singletons(p))

    r = oracle_frequency(make, phi, [1.0], eps=0.05, trials=200, mode="theorem2")
    ok = r["frequency"] >= 0.85
    criterion(4, ok, f"oracle triple feasible in {r['frequency']:.3f} of 200 trials (>= 0.85), "
                     f"mean z {r['z_mean']:.3f}")
    assert ok


@pytest.fixture(scope="module")
def row_100_100_2():
    return run_benchmark([SynthConfig(100, 100, 2, 0.5, trials=100, seed=0)]).summary["100_100_2_0.5"]


@pytest.mark.slow
def test_c05_benchmark_small(criterion, row_100_100_2):
    s = row_100_100_2["ScHeDs"]
    ok = (0.03 <= s["beta_err_mean"] <= 0.12 and s["s_err_mean"] <= 0.10
          and s["sigma_err10_mean"] <= 0.60 and s["failed"] == 0)
    criterion(5, ok, f"(100,100,2,0.5): beta err {s['beta_err_mean']:.3f} in [0.03, 0.12], "
                     f"|s-s*| {s['s_err_mean']:.2f} (<= 0.10), 10|sigma-sigma*| {s['sigma_err10_mean']:.2f} "
                     f"(<= 0.60), {s['failed']} failed")
    assert ok


@pytest.mark.slow
def test_c06_benchmark_large(criterion):
    rep = run_benchmark([SynthConfig(200, 100, 5, 1.0, trials=100, seed=0)], methods=("ScHeDs",))
    s = rep.summary["200_100_5_1"]["ScHeDs"]
    ok = 0.08 <= s["beta_err_mean"] <= 0.25 and s["failed"] == 0
    criterion(6, ok, f"(200,100,5,1.0): beta err {s['beta_err_mean']:.3f} in [0.08, 0.25], {s['failed']} failed")
    assert ok


@pytest.mark.slow
def test_c07_baseline_ordering(criterion, row_100_100_2):
    a, b = row_100_100_2["ScHeDs"]["s_err_mean"], row_100_100_2["SqrtLasso"]["s_err_mean"]
    ok = a <= b
    criterion(7, ok, f"(100,100,2,0.5): |s-s*| ScHeDs {a:.2f} <= SqrtLasso {b:.2f}")
    assert ok


def test_c08_equivariance(criterion):
    worst, same = 0.0, True
    for seed in range(10):
        data = _gaussian(50, 20, 100 + seed)
        base = fit(ScHeDsProblem.build(data))
        for c in (0.1, 3.0, 10.0):
            est = fit(ScHeDsProblem.build(data).with_response(c * data.Y))
            ref = c * base.mean_hat
            worst = max(worst, float(np.abs(est.mean_hat - ref).max() / np.abs(ref).max()))
            same &= est.selected_groups == base.selected_groups
    ok = worst <= 1e-3 and same
    criterion(8, ok, f"10 instances x c in {{0.1, 3, 10}}: max relative prediction gap {worst:.1e} "
                     f"(<= 1e-3), supports {'equal' if same else 'differ'}")
    assert ok


@pytest.mark.slow
def test_c09_scaling(criterion):
    lo, hi = timing_profile([200, 1000])
    ofo = hi["first_order_seconds_per_iteration"] / lo["first_order_seconds_per_iteration"]
    ip = hi["interior_point_seconds_per_iteration"] / lo["interior_point_seconds_per_iteration"]
    ok = ofo <= 10 and ip > ofo
    criterion(9, ok, f"sec/iter ratio p=1000 vs 200: OFO {ofo:.2f} (<= 10), IP {ip:.2f} (> OFO)")
    assert ok


@pytest.mark.slow
def test_c10_temperature_pipeline(criterion):
    temp, tmax, tmin, wind = synthetic_daily_weather(400, seed=0)
    t, U, y = temperature_covariates(temp, tmax, tmin, wind)
    X, part = build_temperature_design(t, U)
    R = build_variance_dictionary(t)
    shape_ok = (X.shape[1] == 2176 and part.K == 136 and all(len(g) == 16 for g in part.groups)
                and R.shape[1] == 11 and bool(np.all(R >= 0)))
    Xs, sc = normalize_columns(X)
    est = fit(ScHeDsProblem.build(RegressionData(Xs, y, R, part, sc)))
    mean, sigma = predict(est, X, R)
    D, pval = ks_test((y - mean) / sigma)
    ok = shape_ok and est.optimal and np.all(np.isfinite(mean)) and 0.0 <= pval <= 1.0
    criterion(10, ok, f"design {X.shape[1]} cols / {part.K} groups, R {R.shape[1]} cols; fit {est.solver_report['status']}, "
                      f"{len(est.selected_groups)} groups selected, KS D {D:.3f} p {pval:.2g}")
    assert ok
