"""Square-root Lasso baseline and its least-squares refit.

    minimize_beta  ||Y - X beta||_2 + lam * sum_j ||X_j||_2 |beta_j|

cast as a cone program over ``(beta, s, t)``:
``min t + lam w^T s`` with ``||Y - X beta|| <= t`` and ``-s <= beta <= s``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .cone import ConeProgram, SolverConfig, solve
from .estimator import SUPPORT_RTOL, SolverError

__all__ = ["SqrtLassoEstimate", "sqrt_lasso", "sqrt_lasso_bias_correct", "universal_lambda",
           "sqrt_lasso_objective"]


def universal_lambda(p: int, T: int) -> float:
    """``sqrt(2 log p / T)``: the universal level ``sqrt(2 log p)`` expressed on the
    scale of the weights ``||X_j||_2`` (which are ``sqrt(T)`` for normalised columns)."""
    return float(np.sqrt(2.0 * np.log(max(p, 2)) / T))


def sqrt_lasso_objective(X, Y, beta, lam) -> float:
    X = np.asarray(X, dtype=float)
    w = np.linalg.norm(X, axis=0)
    return float(np.linalg.norm(Y - X @ beta) + lam * np.sum(w * np.abs(beta)))


@dataclass
class SqrtLassoEstimate:
    beta_hat: np.ndarray
    sigma_hat: float
    selected: list
    weights: np.ndarray
    lam: float
    solver_report: dict = field(default_factory=dict)
    stage: int = 1
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "kind": "sqrt_lasso",
            "stage": self.stage,
            "beta_hat": self.beta_hat.tolist(),
            "sigma_hat": self.sigma_hat,
            "selected": list(self.selected),
            "weights": self.weights.tolist(),
            "lambda": self.lam,
            "solver_report": self.solver_report,
            "notes": list(self.notes),
        }

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)


def _selected(beta) -> list:
    cut = SUPPORT_RTOL * max(1.0, float(np.linalg.norm(beta)))
    return [int(j) for j in np.flatnonzero(np.abs(beta) > cut)]


def sqrt_lasso(X, Y, lam: float, config: Optional[SolverConfig] = None) -> SqrtLassoEstimate:
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float).ravel()
    T, p = X.shape
    if Y.size != T:
        raise ValueError(f"Y has length {Y.size}, expected {T}")
    if not lam >= 0:
        raise ValueError("lambda must be non-negative")
    config = config or SolverConfig()
    w = np.linalg.norm(X, axis=0)
    n = 2 * p + 1
    c = np.concatenate([np.zeros(p), lam * w, [1.0]])
    eye = np.eye(p)
    G = np.zeros((2 * p + 1 + T, n))
    G[:p, :p] = eye                # beta - s <= 0
    G[:p, p:2 * p] = -eye
    G[p:2 * p, :p] = -eye          # -beta - s <= 0
    G[p:2 * p, p:2 * p] = -eye
    G[2 * p, -1] = -1.0            # cone head t
    G[2 * p + 1:, :p] = X          # h - G x = Y - X beta
    h = np.concatenate([np.zeros(2 * p + 1), Y])
    program = ConeProgram(c, G, h, 2 * p, (T + 1,), (("abs", 2 * p), ("residual", 1)))
    sol = solve(program, config)
    beta = sol.x[:p].copy()
    est = SqrtLassoEstimate(beta, float(np.linalg.norm(Y - X @ beta) / np.sqrt(T)), _selected(beta),
                            w, float(lam), sol.summary())
    if not sol.optimal:
        raise SolverError(f"cone solver stopped with status {sol.status!r}", est)
    return est


def sqrt_lasso_bias_correct(X, Y, estimate: SqrtLassoEstimate,
                            config: Optional[SolverConfig] = None) -> SqrtLassoEstimate:
    """Least-squares refit on the selected columns; unchanged if none selected."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float).ravel()
    T, p = X.shape
    if not estimate.selected:
        return SqrtLassoEstimate(estimate.beta_hat.copy(), estimate.sigma_hat, [], estimate.weights,
                                 estimate.lam, estimate.solver_report, estimate.stage,
                                 estimate.notes + ["empty support: bias correction skipped"])
    S = np.asarray(estimate.selected)
    coef, *_ = np.linalg.lstsq(X[:, S], Y, rcond=None)
    beta = np.zeros(p)
    beta[S] = coef
    sigma = float(np.linalg.norm(Y - X @ beta) / np.sqrt(T))
    sel = [j for j in _selected(beta) if j in set(estimate.selected)]
    return SqrtLassoEstimate(beta, sigma, sel, estimate.weights, estimate.lam,
                             {"algorithm": "least_squares", "status": "optimal"}, 2,
                             list(estimate.notes))
