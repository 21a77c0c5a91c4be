import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy import stats

from scheds.diagnostics import (gre_probe, ks_pvalue, ks_test, oracle_triple, oracle_z, support_metrics,
                                theory_constants)
from scheds.estimator import ScHeDsProblem, check_feasible, flatten_slacks
from scheds.model import GroupPartition, RegressionData


# -- constants ---------------------------------------------------------------------------

def test_constants_homoscedastic():
    rng = np.random.default_rng(0)
    X, phi = rng.normal(size=(50, 4)), rng.normal(size=4)
    C = theory_constants(X, np.ones(50), phi, [1.0])
    assert C.C2 == pytest.approx(1.0) and C.C3 == pytest.approx(1.0)
    assert C.C1 == pytest.approx(np.sum((X @ phi) ** 2) / 50)


def test_constants_zero_signal():
    C = theory_constants(np.ones((10, 2)), np.ones(10), [0.0, 0.0], [1.0])
    assert C.C1 == 0.0
    assert C.C4 == pytest.approx(math.sqrt(C.C2) / C.C3)


def test_constants_sigma_two():
    C = theory_constants(np.ones((10, 2)), np.ones(10), [0.0, 0.0], [0.5])
    assert C.C2 == pytest.approx(4.0) and C.C3 == pytest.approx(2.0)


def test_constants_zero_denominator():
    R = np.ones((5, 1))
    R[2] = 0.0
    with pytest.raises(ValueError, match="t = 2"):
        theory_constants(np.ones((5, 1)), R, [1.0], [1.0])


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_constants_summation_order(seed):
    rng = np.random.default_rng(seed)
    T, p, q = 40, 3, 2
    X, R = rng.normal(size=(T, p)), rng.uniform(0.1, 2.0, size=(T, q))
    phi, alpha = rng.normal(size=p), rng.uniform(0.5, 1.5, size=q)
    C = theory_constants(X, R, phi, alpha)
    # second, loop-based evaluation in reverse order
    Ra = [sum(R[t, l] * alpha[l] for l in range(q)) for t in range(T)]
    xp = [sum(X[t, j] * phi[j] for j in range(p)) for t in range(T)]
    c1 = max(math.fsum(R[t, l] ** 2 * xp[t] ** 2 / Ra[t] ** 2 for t in reversed(range(T))) / T for l in range(q))
    c2 = max(math.fsum(R[t, l] ** 2 / Ra[t] ** 2 for t in reversed(range(T))) / T for l in range(q))
    c3 = min(math.fsum(R[t, l] / Ra[t] for t in reversed(range(T))) / T for l in range(q))
    assert C.C1 == pytest.approx(c1, rel=1e-12)
    assert C.C2 == pytest.approx(c2, rel=1e-12)
    assert C.C3 == pytest.approx(c3, rel=1e-12)


# -- GRE -------------------------------------------------------------------------------

def test_gre_orthonormal_is_one():
    Q, _ = np.linalg.qr(np.random.default_rng(1).normal(size=(30, 6)))
    res = gre_probe(Q, GroupPartition.singletons(6), 1.0, 2, budget=20)
    assert res.kappa_upper == pytest.approx(1.0, abs=1e-12)
    assert res.enumerated and res.subsets_checked == 6 + 15


def test_gre_duplicate_columns_below_one():
    X = np.random.default_rng(2).normal(size=(30, 4))
    X[:, 3] = X[:, 0]
    res = gre_probe(X, GroupPartition.singletons(4), 1.0, 1, budget=500)
    assert res.kappa_upper < 0.5
    # the cancellation direction itself
    d = np.zeros(4)
    d[0], d[3] = 1.0, -1.0
    assert np.linalg.norm(X @ d) == pytest.approx(0.0, abs=1e-12)


def test_gre_budget_one_deterministic():
    X = np.random.default_rng(3).normal(size=(20, 5))
    a = gre_probe(X, GroupPartition.singletons(5), 1.0, 2, budget=1, seed=4)
    b = gre_probe(X, GroupPartition.singletons(5), 1.0, 2, budget=1, seed=4)
    assert a.kappa_upper == b.kappa_upper
    np.testing.assert_array_equal(a.witness, b.witness)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 1000), st.integers(1, 40))
def test_gre_monotone_in_budget(seed, budget):
    X = np.random.default_rng(seed).normal(size=(15, 6))
    part = GroupPartition.contiguous([2, 2, 1, 1])
    lam = [1.0, 2.0, 1.0, 0.5]
    a = gre_probe(X, part, lam, 2, budget=budget, seed=seed)
    b = gre_probe(X, part, lam, 2, budget=budget + 7, seed=seed)
    assert b.kappa_upper <= a.kappa_upper
    assert a.kappa_upper >= 0


def test_gre_witness_in_cone():
    X = np.random.default_rng(5).normal(size=(20, 6))
    part = GroupPartition.singletons(6)
    lam = np.linspace(1, 2, 6)
    res = gre_probe(X, part, lam, 2, budget=50)
    norms = np.linalg.norm(X * res.witness, axis=0)
    S = list(res.witness_subset)
    off = [k for k in range(6) if k not in S]
    assert lam[off] @ norms[off] <= lam[S] @ norms[S] * (1 + 1e-10)


def test_gre_sampled_subsets():
    X = np.random.default_rng(6).normal(size=(20, 30))
    res = gre_probe(X, GroupPartition.singletons(30), 1.0, 3, budget=2, max_subsets=50)
    assert not res.enumerated and res.subsets_checked == 50


def test_gre_errors():
    X = np.ones((5, 3))
    with pytest.raises(ValueError):
        gre_probe(X, GroupPartition.singletons(3), 1.0, 4)
    with pytest.raises(ValueError):
        gre_probe(X, GroupPartition.singletons(3), 1.0, 1, budget=0)


# -- oracle triple ---------------------------------------------------------------------------

def test_oracle_triple_structure():
    rng = np.random.default_rng(7)
    T, p = 200, 10
    X = rng.normal(size=(T, p))
    phi = np.zeros(p)
    phi[:2] = 0.5
    Y = X @ phi + rng.normal(size=T)
    problem = ScHeDsProblem.build(RegressionData(X, Y, np.ones((T, 1)), GroupPartition.singletons(p)),
                                  mode="theorem2", eps=0.05)
    phi_t, alpha_t, v, z = oracle_triple(problem, phi, [1.0], 0.05)
    C = theory_constants(X, np.ones(T), phi, [1.0])
    assert z == pytest.approx(oracle_z(C, 1, T, 0.05))
    assert 1 < z <= 2
    assert set(np.flatnonzero(phi_t)) == {0, 1}
    slacks = check_feasible(problem, phi_t, alpha_t, v)
    np.testing.assert_allclose(slacks["rotated"], 0.0, atol=1e-12)
    assert flatten_slacks(slacks).min() >= -1e-9


# -- KS ------------------------------------------------------------------------------

def test_ks_perfect_quantiles():
    n = 1000
    D, p = ks_test(stats.norm.ppf((np.arange(1, n + 1) - 0.5) / n))
    assert D == pytest.approx(0.5 / n, rel=1e-6)
    assert p == pytest.approx(1.0)


def test_ks_all_zero():
    D, p = ks_test(np.zeros(500))
    assert D == 0.5
    assert p < 1e-50


def test_ks_level():
    passed = sum(ks_test(np.random.default_rng(s).standard_normal(100))[1] > 0.01 for s in range(100))
    assert passed >= 95


def test_ks_too_few():
    with pytest.raises(ValueError):
        ks_test([0.1, 0.2, 0.3])


@pytest.mark.parametrize("x", [0.05, 0.2, 0.5, 0.8, 0.999, 1.0, 1.3, 2.0, 3.5])
def test_ks_pvalue_matches_scipy(x):
    assert ks_pvalue(x) == pytest.approx(stats.kstwobign.sf(x), abs=1e-10)


def test_ks_statistic_matches_scipy():
    r = np.random.default_rng(0).normal(0.3, 1.2, size=80)
    D, _ = ks_test(r)
    assert D == pytest.approx(stats.kstest(r, "norm").statistic, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(arrays(float, st.integers(5, 60), elements=st.floats(-50, 50, allow_nan=False)))
def test_ks_ranges(r):
    D, p = ks_test(r)
    assert 0.0 <= D <= 1.0 and 0.0 <= p <= 1.0


# -- support metrics ----------------------------------------------------------------------

def test_support_metrics_examples():
    assert support_metrics([1, 2], [1, 2], 5) == (0, 1.0, 1.0)
    assert support_metrics([], [1, 2], 5) == (2, 1.0, 0.0)
    assert support_metrics([1, 2, 4], [1, 2], 5) == (1, pytest.approx(2 / 3), 1.0)
    with pytest.raises(ValueError):
        support_metrics([7], [1], 5)
