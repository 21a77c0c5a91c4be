"""Computable quantities attached to the estimator's theory.

* ``theory_constants``: the four constants ``C1..C4`` that enter the
  feasibility level ``z`` of the oracle triple and the risk bounds.
* ``gre_probe``: a sampling falsifier for the group-restricted eigenvalue
  condition.  It can only *over*-estimate the true constant.
* ``oracle_triple`` / ``oracle_frequency``: the inflated truth
  ``(z phi*, z alpha*, 1 / (z R alpha*))`` and how often it is feasible.
* ``ks_test``: one-sample Kolmogorov-Smirnov test against N(0, 1).
* ``support_metrics``: ``|s_hat - s*|``, precision and recall.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.special import ndtr

from .estimator import ScHeDsProblem, check_feasible, flatten_slacks
from .model import GroupPartition, RegressionData

__all__ = [
    "TheoryConstants",
    "theory_constants",
    "GreProbeResult",
    "gre_probe",
    "oracle_z",
    "oracle_triple",
    "oracle_frequency",
    "ks_test",
    "ks_pvalue",
    "support_metrics",
    "MAX_ENUMERATED_SUBSETS",
]

MAX_ENUMERATED_SUBSETS = 10_000
KS_MIN_POINTS = 5
KS_TERM_TOL = 1e-12


# -- constants ------------------------------------------------------------------

@dataclass(frozen=True)
class TheoryConstants:
    C1: float
    C2: float
    C3: float
    C4: float

    def to_dict(self) -> dict:
        return {"C1": self.C1, "C2": self.C2, "C3": self.C3, "C4": self.C4}


def theory_constants(X, R, phi_star, alpha_star) -> TheoryConstants:
    """``C1 = max_l mean_t r_tl^2 (X_t phi*)^2 / (R_t alpha*)^2``,
    ``C2 = max_l mean_t r_tl^2 / (R_t alpha*)^2``,
    ``C3 = min_l mean_t r_tl / (R_t alpha*)``,
    ``C4 = (sqrt(C2) + sqrt(2 C1)) / C3``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    R = np.asarray(R, dtype=float)
    R = R.reshape(-1, 1) if R.ndim == 1 else R
    phi = np.asarray(phi_star, dtype=float).ravel()
    alpha = np.asarray(alpha_star, dtype=float).ravel()
    T = X.shape[0]
    if R.shape[0] != T:
        raise ValueError(f"R has {R.shape[0]} rows, expected {T}")
    Ra = R @ alpha
    bad = np.flatnonzero(~(Ra > 0))
    if bad.size:
        raise ValueError(f"R alpha* must be positive; zero or negative at t = {int(bad[0])}")
    W = R / Ra[:, None]                      # r_tl / (R_t alpha*)
    Xphi = X @ phi
    C1 = float(np.max(((W * Xphi[:, None]) ** 2).mean(axis=0)))
    C2 = float(np.max((W ** 2).mean(axis=0)))
    C3 = float(np.min(W.mean(axis=0)))
    if not C3 > 0:
        raise ValueError("C3 = 0: some column of R vanishes, C4 is undefined")
    C4 = (math.sqrt(C2) + math.sqrt(2.0 * C1)) / C3
    return TheoryConstants(C1, C2, C3, C4)


# -- GRE probe --------------------------------------------------------------------

@dataclass
class GreProbeResult:
    subset_size: int
    kappa_upper: float
    witness: np.ndarray
    witness_subset: tuple
    subsets_checked: int
    enumerated: bool
    budget: int

    @property
    def ratio(self) -> float:
        return self.kappa_upper ** 2

    def to_dict(self) -> dict:
        return {"subset_size": self.subset_size, "kappa_upper": self.kappa_upper,
                "witness": self.witness.tolist(), "witness_subset": list(self.witness_subset),
                "subsets_checked": self.subsets_checked, "enumerated": self.enumerated,
                "budget": self.budget}


def _subset_count(K, N):
    return sum(math.comb(K, j) for j in range(1, N + 1))


def _rng(seed, *key):
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), *map(int, key)])))


def _subsets(K, N, seed, max_subsets):
    """All non-empty subsets of size <= N if there are few enough, else a
    deterministic sample of ``max_subsets`` of them."""
    if _subset_count(K, N) <= max_subsets:
        for j in range(1, N + 1):
            yield from itertools.combinations(range(K), j)
        return
    for i in range(max_subsets):
        rng = _rng(seed, 1, i)
        size = int(rng.integers(1, N + 1))
        yield tuple(sorted(int(k) for k in rng.choice(K, size, replace=False)))


def gre_probe(X, partition: GroupPartition, lam, N: int, budget: int = 200, seed: int = 0,
              max_subsets: int = MAX_ENUMERATED_SUBSETS) -> GreProbeResult:
    """Smallest ratio ``||X d||^2 / sum_{k in S} ||X_Gk d_Gk||^2`` found over
    subsets ``S`` of at most ``N`` groups and directions ``d`` in the cone
    ``sum_{k not in S} lam_k ||X_Gk d_Gk|| <= sum_{k in S} lam_k ||X_Gk d_Gk||``.

    Each subset draws ``budget`` Gaussian directions from its own stream.  A
    direction violating the cone has its off-subset blocks shrunk onto the
    boundary; its restriction to ``S`` (always in the cone) is evaluated as
    well.  ``kappa_upper`` is the square root of the minimum: an upper bound on
    the true constant, never a certificate that the condition holds.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    T, p = X.shape
    partition.check(p)
    K = partition.K
    lam = np.broadcast_to(np.asarray(lam, dtype=float), (K,))
    if not 1 <= N <= K:
        raise ValueError(f"subset size N = {N} must lie in [1, K = {K}]")
    if budget < 1:
        raise ValueError("budget must be >= 1")
    gid = partition.group_of()
    enumerated = _subset_count(K, N) <= max_subsets
    best = (np.inf, None, ())
    checked = 0
    for i, S in enumerate(_subsets(K, N, seed, max_subsets)):
        checked += 1
        rng = _rng(seed, 0, i)
        D = rng.standard_normal((budget, p))
        inS = np.zeros(K, dtype=bool)
        inS[list(S)] = True
        # per-group image norms ||X_Gk d_Gk||, one row per direction
        norms = np.column_stack([np.linalg.norm(D[:, g] @ X[:, g].T, axis=1)
                                 for g in partition.groups])
        on = norms[:, inS] @ lam[inS]
        off = norms[:, ~inS] @ lam[~inS]
        shrink = np.where(off > on, on / np.where(off > 0, off, 1.0), 1.0)
        colmask = inS[gid]
        boundary = np.where(colmask, D, D * shrink[:, None])
        restricted = np.where(colmask, D, 0.0)
        denom = (norms[:, inS] ** 2).sum(axis=1)
        for cand in (boundary, restricted):
            num = np.sum((cand @ X.T) ** 2, axis=1)
            with np.errstate(divide="ignore", invalid="ignore"):
                ratio = np.where(denom > 0, num / denom, np.inf)
            j = int(np.argmin(ratio))
            if ratio[j] < best[0]:
                best = (float(ratio[j]), cand[j].copy(), tuple(S))
    ratio, witness, subset = best
    if witness is None:
        witness = np.zeros(p)
        ratio = np.inf
    return GreProbeResult(int(N), float(np.sqrt(max(ratio, 0.0))), witness, subset, checked,
                          enumerated, int(budget))


# -- feasibility oracle ------------------------------------------------------------

def oracle_z(constants: TheoryConstants, q: int, T: int, eps: float) -> float:
    """``1 + 2 C4 sqrt(2 log(2 q / eps) / T)``."""
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    return 1.0 + 2.0 * constants.C4 * math.sqrt(2.0 * math.log(2.0 * q / eps) / T)


def oracle_triple(problem: ScHeDsProblem, phi_star, alpha_star, eps: float):
    """``(z phi*, z alpha*, v, z)`` with ``v_t = 1 / (z R_t alpha*)``."""
    d = problem.data
    C = theory_constants(d.X, d.R, phi_star, alpha_star)
    z = oracle_z(C, d.q, d.T, eps)
    phi = z * np.asarray(phi_star, dtype=float)
    alpha = z * np.asarray(alpha_star, dtype=float)
    v = 1.0 / (d.R @ alpha)
    return phi, alpha, v, z


def oracle_frequency(make_data, phi_star, alpha_star, eps: float, trials: int,
                     tol: float = 1e-9, **build) -> dict:
    """Fraction of trials in which the oracle triple is feasible.

    ``make_data(i)`` returns the :class:`RegressionData` of trial ``i``;
    ``build`` is passed to :meth:`ScHeDsProblem.build` (e.g. ``mode="theorem2"``).
    A constraint counts as satisfied when its slack is ``>= -tol``.
    """
    feasible = 0
    z_values = []
    worst = []
    for i in range(trials):
        data: RegressionData = make_data(i)
        problem = ScHeDsProblem.build(data, eps=eps, **build)
        phi, alpha, v, z = oracle_triple(problem, phi_star, alpha_star, eps)
        slack = flatten_slacks(check_feasible(problem, phi, alpha, v))
        ok = bool(np.all(slack >= -tol))
        feasible += ok
        z_values.append(z)
        worst.append(float(slack.min()))
    return {"trials": trials, "feasible": feasible, "frequency": feasible / trials,
            "bound": 1.0 - 2.0 * eps, "z_mean": float(np.mean(z_values)), "min_slack": worst}


# -- Kolmogorov-Smirnov ------------------------------------------------------------

def ks_pvalue(x: float) -> float:
    """``P(K > x)`` for the limiting Kolmogorov distribution.

    Alternating series ``2 sum (-1)^(k-1) exp(-2 k^2 x^2)`` for ``x >= 1``;
    below that the series converges slowly, and the Jacobi theta form
    ``1 - sqrt(2 pi)/x sum exp(-(2k-1)^2 pi^2 / (8 x^2))`` is used.
    """
    if x <= 0:
        return 1.0
    if x < 1.0:
        if x < 0.1:  # every theta term underflows below 1e-200
            return 1.0
        s, k = 0.0, 1
        while True:
            term = math.exp(-((2 * k - 1) ** 2) * math.pi ** 2 / (8.0 * x * x))
            s += term
            if term < KS_TERM_TOL:
                break
            k += 1
        return min(1.0, max(0.0, 1.0 - math.sqrt(2.0 * math.pi) / x * s))
    s, k = 0.0, 1
    while True:
        term = math.exp(-2.0 * k * k * x * x)
        if term < KS_TERM_TOL:
            break
        s += term if k % 2 else -term
        k += 1
    return min(1.0, max(0.0, 2.0 * s))


def ks_test(residuals) -> tuple[float, float]:
    """``(D, p)`` for the hypothesis that ``residuals`` are i.i.d. N(0, 1)."""
    r = np.sort(np.asarray(residuals, dtype=float).ravel())
    n = r.size
    if n < KS_MIN_POINTS:
        raise ValueError(f"KS test needs at least {KS_MIN_POINTS} residuals, got {n}")
    if not np.all(np.isfinite(r)):
        raise ValueError("residuals must be finite")
    F = ndtr(r)
    i = np.arange(1, n + 1)
    D = float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))
    D = min(max(D, 0.0), 1.0)
    return D, ks_pvalue(math.sqrt(n) * D)


# -- support recovery -------------------------------------------------------------

def support_metrics(selected: Sequence[int], true_support: Sequence[int],
                    p: Optional[int] = None) -> tuple[int, float, float]:
    """``(|s_hat - s*|, precision, recall)``; empty selections have precision 1
    and an empty truth has recall 1."""
    sel, true = set(int(j) for j in selected), set(int(j) for j in true_support)
    if p is not None:
        out = [j for j in sel | true if not 0 <= j < p]
        if out:
            raise ValueError(f"index {out[0]} outside [0, {p})")
    hit = len(sel & true)
    precision = hit / len(sel) if sel else 1.0
    recall = hit / len(true) if true else 1.0
    return abs(len(sel) - len(true)), precision, recall
