"""Scaled heteroscedastic Dantzig selector as a second-order cone program.

The estimator works in the inverse-scale parameterisation: the conditional
mean is ``X phi / (R alpha)`` and the conditional standard deviation is
``1 / (R alpha)``.  With ``Q_k`` an orthonormal basis of the columns of
group ``k`` and ``D_Y = diag(Y)`` the program is

    minimize    sum_k lambda_k u_k
    subject to  ||Q_k^T (D_Y R alpha - X phi)||      <= lambda_k       (group score)
                ||X_{G_k} phi_{G_k}||                <= u_k            (group norm)
                R^T v <= R^T D_Y (D_Y R alpha - X phi)                 (variance score)
                ||(v_t, R_t alpha, sqrt 2)||         <= v_t + R_t alpha (v_t R_t alpha >= 1)

over ``x = (phi, alpha, u, v)`` of length ``p + q + K + T``.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .cone import BlockRows, ConeProgram, ConeSolution, SolverConfig, constraint_violations, solve
from .model import ColumnScaling, GroupGeometry, GroupPartition, RegressionData, group_geometry, validate

log = logging.getLogger(__name__)

__all__ = [
    "LambdaRule",
    "ScHeDsProblem",
    "ScHeDsEstimate",
    "SolverError",
    "lambda_weights",
    "assemble_program",
    "fit",
    "check_feasible",
    "flatten_slacks",
    "saturation_residual",
    "bias_correct",
    "predict",
    "select_groups",
    "SUPPORT_RTOL",
    "DEFAULT_EPS",
]

SUPPORT_RTOL = 1e-5
DEFAULT_EPS = 0.1
SQRT2 = np.sqrt(2.0)


class SolverError(RuntimeError):
    """Non-optimal solve; ``estimate`` holds the partial solution."""

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


def select_groups(norms, total) -> list[int]:
    """Indices whose block norm exceeds ``SUPPORT_RTOL * max(1, total)``."""
    cut = SUPPORT_RTOL * max(1.0, float(total))
    return [int(k) for k in np.flatnonzero(np.asarray(norms) > cut)]


# -- penalties -------------------------------------------------------------------

@dataclass(frozen=True)
class LambdaRule:
    mode: str
    values: np.ndarray
    lambda0: Optional[float] = None
    K_over_eps: Optional[float] = None

    def to_dict(self) -> dict:
        return {"mode": self.mode, "lambda0": self.lambda0, "K_over_eps": self.K_over_eps,
                "values": np.asarray(self.values).tolist()}

    @classmethod
    def from_dict(cls, d) -> "LambdaRule":
        return cls(d["mode"], np.asarray(d["values"], dtype=float), d.get("lambda0"),
                   d.get("K_over_eps"))

    def scaled(self, factor: float) -> "LambdaRule":
        lam0 = None if self.lambda0 is None else self.lambda0 * factor
        return replace(self, values=self.values * factor, lambda0=lam0)


def lambda_weights(geometry: GroupGeometry, mode: str = "scaled_sqrt_rank",
                   lambda0: Optional[float] = None, eps: float = DEFAULT_EPS,
                   K: Optional[int] = None) -> LambdaRule:
    """Per-group penalties.

    ``scaled_sqrt_rank``: ``lambda_k = lambda0 sqrt(r_k)``, ``lambda0`` defaulting
    to ``sqrt(2 log p)``.  ``theorem2``:
    ``lambda_k = 2 (r_k + 2 sqrt(r_k log(K/eps)) + 2 log(K/eps))^{1/2}``.
    Groups of rank 0 get ``lambda_k = 0``.
    """
    r = np.asarray(geometry.ranks, dtype=float)
    if mode == "scaled_sqrt_rank":
        if lambda0 is None:
            p = geometry.partition.p
            lambda0 = float(np.sqrt(2.0 * np.log(max(p, 2))))
        if not lambda0 > 0:
            raise ValueError("lambda0 must be positive")
        return LambdaRule(mode, lambda0 * np.sqrt(r), lambda0=float(lambda0))
    if mode == "theorem2":
        if not 0.0 < eps < 1.0:
            raise ValueError("eps must lie in (0, 1)")
        K = geometry.K if K is None else int(K)
        if K < 1:
            raise ValueError("K must be >= 1")
        L = np.log(K / eps)
        vals = 2.0 * np.sqrt(r + 2.0 * np.sqrt(r * L) + 2.0 * L)
        vals[r == 0] = 0.0
        return LambdaRule(mode, vals, K_over_eps=K / eps)
    raise ValueError(f"unknown lambda mode {mode!r}")


# -- problem ---------------------------------------------------------------------

@dataclass(frozen=True)
class ScHeDsProblem:
    data: RegressionData
    geometry: GroupGeometry
    lam: np.ndarray
    bound_Ly: Optional[float] = None
    bound_mu_star: Optional[float] = None
    rule: Optional[LambdaRule] = None

    def __post_init__(self):
        lam = np.array(self.lam, dtype=float).ravel()
        lam.setflags(write=False)
        object.__setattr__(self, "lam", lam)
        if lam.size != self.geometry.K:
            raise ValueError(f"lambda has length {lam.size}, expected K = {self.geometry.K}")
        if np.any(lam < 0) or not np.all(np.isfinite(lam)):
            raise ValueError("lambda entries must be finite and non-negative")
        for name in ("bound_Ly", "bound_mu_star"):
            val = getattr(self, name)
            if val is not None and not val > 0:
                raise ValueError(f"{name} must be positive")

    @classmethod
    def build(cls, data: RegressionData, rule: Optional[LambdaRule] = None, mode="scaled_sqrt_rank",
              lambda0=None, eps=DEFAULT_EPS, bound_Ly=None, bound_mu_star=None) -> "ScHeDsProblem":
        bad = validate(data)
        if bad:
            raise ValueError("invalid data: " + "; ".join(bad))
        geom = group_geometry(data.X, data.partition)
        if rule is None:
            rule = lambda_weights(geom, mode, lambda0=lambda0, eps=eps)
        lam = np.where(geom.ranks > 0, rule.values, 0.0)
        return cls(data, geom, lam, bound_Ly, bound_mu_star, rule)

    @property
    def dims(self):
        d = self.data
        return d.p, d.q, d.K, d.T

    @property
    def n(self) -> int:
        return sum(self.dims)

    def slices(self):
        p, q, K, T = self.dims
        return slice(0, p), slice(p, p + q), slice(p + q, p + q + K), slice(p + q + K, p + q + K + T)

    def with_response(self, Y) -> "ScHeDsProblem":
        return replace(self, data=self.data.with_response(Y))


def _check_Y(problem, Y):
    Y = np.asarray(problem.data.Y if Y is None else Y, dtype=float).ravel()
    if Y.size != problem.data.T:
        raise ValueError(f"Y has length {Y.size}, expected T = {problem.data.T}")
    return Y


def _null_basis(geom: GroupGeometry, k: int) -> np.ndarray:
    """Orthonormal basis of the null space of ``X_{G_k}``, shape ``(|G_k|, |G_k| - r_k)``."""
    size = len(geom.partition.groups[k])
    r = int(geom.ranks[k])
    if r == 0:
        return np.eye(size)
    if r == size:
        return np.zeros((size, 0))
    return np.linalg.svd(geom.coef[k], full_matrices=True)[2][r:].T


def _pin_rows(problem: ScHeDsProblem):
    geom = problem.geometry
    K = problem.dims[2]
    n = problem.n
    su = problem.slices()[2]
    rows = []
    for k in range(K):
        N = _null_basis(geom, k)
        if N.shape[1]:
            Pk = np.zeros((N.shape[1], n))
            Pk[:, geom.partition.groups[k]] = N.T
            rows.append(Pk)
    dead = [k for k in range(K) if geom.ranks[k] == 0]
    if dead:
        Pu = np.zeros((len(dead), n))
        Pu[np.arange(len(dead)), [su.start + k for k in dead]] = 1.0
        rows.append(Pu)
    return sp.csr_matrix(np.vstack(rows)) if rows else None


def assemble_program(problem: ScHeDsProblem, Y=None) -> ConeProgram:
    """Cone program over ``x = (phi, alpha, u, v)``.

    Linear rows come first (variance score, optional bounds, null-space pins),
    then cones (group scores, group norms, rotated cones).  The
    group-score block is kept in factored form ``Q^T @ [-X, D_Y R, 0, 0]``.
    """
    Y = _check_Y(problem, Y)
    data, geom = problem.data, problem.geometry
    X, R = data.X, data.R
    p, q, K, T = problem.dims
    n = problem.n
    sphi, salpha, su, sv = problem.slices()
    DYR = Y[:, None] * R
    active = [k for k in range(K) if geom.ranks[k] > 0]

    c = np.zeros(n)
    c[su] = problem.lam

    blocks, rhs, labels = [], [], []

    # variance score: R^T v - R^T D_Y (D_Y R alpha - X phi) <= 0
    A = np.zeros((q, n))
    A[:, sphi] = DYR.T @ X
    A[:, salpha] = -(DYR.T @ DYR)
    A[:, sv] = R.T
    blocks.append(A)
    rhs.append(np.zeros(q))
    labels.append(("variance_score", q))

    if problem.bound_Ly is not None:
        L = problem.bound_Ly
        for sign, name in ((1.0, "mean_bound_upper"), (-1.0, "mean_bound_lower")):
            B = np.zeros((T, n))
            B[:, sphi] = sign * X
            B[:, salpha] = -L * R
            blocks.append(B)
            rhs.append(np.zeros(T))
            labels.append((name, T))
        B = np.zeros((T, n))
        B[:, salpha] = -R
        blocks.append(B)
        rhs.append(np.full(T, -1.0 / L))
        labels.append(("scale_floor", T))
    if problem.bound_mu_star is not None:
        B = np.zeros((T, n))
        B[:, salpha] = R
        blocks.append(B)
        rhs.append(np.full(T, problem.bound_mu_star))
        labels.append(("scale_cap", T))

    # N_k^T phi_{G_k} = 0 on null(X_{G_k}), and u_k = 0 for rank-0 groups, as
    # paired rows; otherwise G has a null space and phi is not unique
    P = _pin_rows(problem)
    if P is not None:
        blocks.append(sp.vstack([P, -P]).tocsr())
        rhs.append(np.zeros(2 * P.shape[0]))
        labels.append(("degenerate_pin", 2 * P.shape[0]))
    n_lin = sum(b.shape[0] for b in blocks)

    # group scores: rows [0; -Q_k^T] @ [-X, D_Y R, 0, 0], h = [lambda_k; 0]
    dims = []
    if active:
        size = sum(int(geom.ranks[k]) + 1 for k in active)
        left = np.zeros((size, T))
        h9 = np.zeros(size)
        row = 0
        for k in active:
            r = int(geom.ranks[k])
            h9[row] = problem.lam[k]
            left[row + 1: row + 1 + r] = -geom.bases[k].T
            row += r + 1
            dims.append(r + 1)
        right = np.zeros((T, n))
        right[:, sphi] = -X
        right[:, salpha] = DYR
        blocks.append((left, right))
        rhs.append(h9)
        labels.append(("group_score", len(active)))

        # group norms: rows [-e_{u_k}; -C_k on phi_{G_k}], h = 0
        rows, cols, vals = [], [], []
        row = 0
        for k in active:
            g = geom.partition.groups[k]
            C = geom.coef[k]
            rows.append(row)
            cols.append(su.start + k)
            vals.append(-1.0)
            rr, cc = np.meshgrid(np.arange(C.shape[0]), np.arange(C.shape[1]), indexing="ij")
            rows.extend((row + 1 + rr).ravel())
            cols.extend(g[cc].ravel())
            vals.extend((-C).ravel())
            row += C.shape[0] + 1
            dims.append(C.shape[0] + 1)
        blocks.append(sp.csr_matrix((vals, (rows, cols)), shape=(row, n)))
        rhs.append(np.zeros(row))
        labels.append(("group_norm", len(active)))

    # rotated cones: ||(v_t, R_t alpha, sqrt 2)|| <= v_t + R_t alpha
    tt = np.arange(T)
    rows = [4 * tt, 1 + 4 * tt, 2 + 4 * tt]
    Rot = sp.lil_matrix((4 * T, n))
    Rot[4 * tt, sv.start + tt] = -1.0
    Rot[1 + 4 * tt, sv.start + tt] = -1.0
    Rot = Rot.tocsr()
    Ralpha = np.zeros((4 * T, n))
    Ralpha[rows[0], salpha] = -R
    Ralpha[rows[2], salpha] = -R
    blocks.append((Rot + sp.csr_matrix(Ralpha)).tocsr())
    h_rot = np.zeros(4 * T)
    h_rot[3 + 4 * tt] = SQRT2
    rhs.append(h_rot)
    dims.extend([4] * T)
    labels.append(("rotated", T))

    G = BlockRows(blocks, n)
    return ConeProgram(c, G, np.concatenate(rhs), n_lin, tuple(dims), tuple(labels))


# -- estimate --------------------------------------------------------------------

@dataclass
class ScHeDsEstimate:
    phi_hat: np.ndarray
    alpha_hat: np.ndarray
    v_hat: np.ndarray
    sigma_hat: np.ndarray
    mean_hat: np.ndarray
    selected_groups: list
    solver_report: dict
    u_hat: Optional[np.ndarray] = None
    rule: Optional[LambdaRule] = None
    scaling: Optional[ColumnScaling] = None
    partition: Optional[GroupPartition] = None
    stage: int = 1
    notes: list = field(default_factory=list)

    @property
    def optimal(self) -> bool:
        return self.solver_report.get("status") == "optimal"

    @property
    def selected_columns(self) -> np.ndarray:
        if self.partition is None:
            return np.flatnonzero(np.abs(self.phi_hat) > 0)
        cols = [self.partition.groups[k] for k in self.selected_groups]
        return np.sort(np.concatenate(cols)) if cols else np.zeros(0, dtype=int)

    def coef(self, raw: bool = True) -> np.ndarray:
        """Mean coefficients ``phi / alpha`` (q = 1 only), in raw column units by default."""
        if self.alpha_hat.size != 1:
            raise ValueError("coef is defined for a one-column variance dictionary")
        beta = self.phi_hat / self.alpha_hat[0]
        if raw and self.scaling is not None:
            beta = self.scaling.to_raw(beta)
        return beta

    def to_dict(self) -> dict:
        return {
            "kind": "scheds",
            "stage": self.stage,
            "phi_hat": self.phi_hat.tolist(),
            "alpha_hat": self.alpha_hat.tolist(),
            "selected_groups": list(self.selected_groups),
            "lambda_rule": None if self.rule is None else self.rule.to_dict(),
            "solver_report": self.solver_report,
            "column_scaling": None if self.scaling is None else self.scaling.to_dict(),
            "partition": None if self.partition is None else self.partition.to_list(),
            "notes": list(self.notes),
        }

    @classmethod
    def from_dict(cls, d) -> "ScHeDsEstimate":
        if d.get("kind", "scheds") != "scheds":
            raise ValueError(f"not a ScHeDs model: kind={d.get('kind')!r}")
        phi = np.asarray(d["phi_hat"], dtype=float)
        alpha = np.asarray(d["alpha_hat"], dtype=float)
        return cls(
            phi_hat=phi, alpha_hat=alpha, v_hat=np.zeros(0), sigma_hat=np.zeros(0),
            mean_hat=np.zeros(0), selected_groups=[int(k) for k in d["selected_groups"]],
            solver_report=dict(d.get("solver_report") or {}),
            rule=None if d.get("lambda_rule") is None else LambdaRule.from_dict(d["lambda_rule"]),
            scaling=None if d.get("column_scaling") is None else ColumnScaling.from_dict(d["column_scaling"]),
            partition=None if d.get("partition") is None else GroupPartition(d["partition"]),
            stage=int(d.get("stage", 1)), notes=list(d.get("notes", [])),
        )

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)

    @classmethod
    def load(cls, path) -> "ScHeDsEstimate":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def _make_estimate(problem, phi, alpha, v, u, report, stage=1, notes=()):
    data, geom = problem.data, problem.geometry
    with np.errstate(divide="ignore", invalid="ignore"):
        Ra = data.R @ alpha
        sigma = 1.0 / Ra
        mean = (data.X @ phi) / Ra
    norms = np.array([np.linalg.norm(phi[g]) for g in data.partition.groups])
    sel = select_groups(norms, np.linalg.norm(phi))
    return ScHeDsEstimate(phi, alpha, v, sigma, mean, sel, report, u, problem.rule,
                          data.scaling, data.partition, stage, list(notes))


def fit(problem: ScHeDsProblem, Y=None, config: Optional[SolverConfig] = None) -> ScHeDsEstimate:
    """Solve the cone program; raises :class:`SolverError` unless optimal."""
    Y = _check_Y(problem, Y)
    if Y is not problem.data.Y:
        problem = problem.with_response(Y)
    config = config or SolverConfig()
    program = assemble_program(problem)
    sol: ConeSolution = solve(program, config)
    sphi, salpha, su, sv = problem.slices()
    x = sol.x
    est = _make_estimate(problem, x[sphi].copy(), x[salpha].copy(), x[sv].copy(), x[su].copy(),
                         sol.summary())
    if not sol.optimal:
        raise SolverError(f"cone solver stopped with status {sol.status!r}", est)
    return est


# -- certificates ----------------------------------------------------------------

def check_feasible(problem: ScHeDsProblem, phi, alpha, v, u=None, Y=None) -> dict:
    """Slack of every constraint, grouped by family (``>= 0`` means satisfied).

    Families follow the program order.  ``u`` defaults to the group norms of
    ``phi`` (zero slack on the group-norm cones).
    """
    Y = _check_Y(problem, Y)
    data, geom = problem.data, problem.geometry
    p, q, K, T = problem.dims
    phi = np.asarray(phi, dtype=float).ravel()
    alpha = np.asarray(alpha, dtype=float).ravel()
    v = np.asarray(v, dtype=float).ravel()
    if phi.size != p or alpha.size != q or v.size != T:
        raise ValueError(f"expected phi/alpha/v of lengths {p}/{q}/{T}")
    u = geom.group_norms(phi) if u is None else np.asarray(u, dtype=float).ravel()
    if u.size != K:
        raise ValueError(f"u has length {u.size}, expected {K}")
    X, R = data.X, data.R
    Ra = R @ alpha
    Xphi = X @ phi
    resid = Y * Ra - Xphi
    out = {"variance_score": (Y * R.T) @ resid - R.T @ v}
    if problem.bound_Ly is not None:
        L = problem.bound_Ly
        out["mean_bound_upper"] = L * Ra - Xphi
        out["mean_bound_lower"] = L * Ra + Xphi
        out["scale_floor"] = Ra - 1.0 / L
    if problem.bound_mu_star is not None:
        out["scale_cap"] = problem.bound_mu_star - Ra
    pinned = [_null_basis(geom, k).T @ phi[geom.partition.groups[k]] for k in range(K)]
    pinned.append(u[[k for k in range(K) if geom.ranks[k] == 0]])
    pinned = np.concatenate(pinned)
    if pinned.size:
        out["degenerate_pin"] = np.concatenate([-pinned, pinned])
    active = [k for k in range(K) if geom.ranks[k] > 0]
    out["group_score"] = np.array([problem.lam[k] - np.linalg.norm(geom.bases[k].T @ resid)
                                   for k in active])
    out["group_norm"] = np.array([u[k] - np.linalg.norm(geom.coef[k] @ phi[geom.partition.groups[k]])
                                  for k in active])
    out["rotated"] = v + Ra - np.sqrt(v ** 2 + Ra ** 2 + 2.0)
    return out


def flatten_slacks(slacks: dict) -> np.ndarray:
    """Concatenate a :func:`check_feasible` report in program order."""
    return np.concatenate([np.atleast_1d(s) for s in slacks.values()])


def saturation_residual(problem: ScHeDsProblem, estimate: ScHeDsEstimate, Y=None,
                        relative: bool = False) -> np.ndarray:
    """``sum_t r_tl / (R_t alpha) - sum_t (y_t R_t alpha - X_t phi) y_t r_tl`` per column l.

    With ``relative=True`` each entry is divided by the larger of the two sums.
    """
    Y = _check_Y(problem, Y)
    R, X = problem.data.R, problem.data.X
    Ra = R @ estimate.alpha_hat
    lhs = R.T @ (1.0 / Ra)
    rhs = (Y * R.T) @ (Y * Ra - X @ estimate.phi_hat)
    res = lhs - rhs
    if relative:
        res = res / np.maximum(np.abs(lhs), np.abs(rhs))
    return res


# -- second stage ------------------------------------------------------------------

def _max_likelihood_scale(R, M, alpha0, max_iter=100):
    """Maximise ``sum_t log(R_t alpha) - alpha^T M alpha / 2`` by damped Newton."""
    alpha = np.asarray(alpha0, dtype=float).copy()
    Ra = R @ alpha
    if np.any(Ra <= 0):
        alpha = np.linalg.lstsq(R, np.ones(R.shape[0]), rcond=None)[0]
        Ra = R @ alpha
        if np.any(Ra <= 0):
            raise ValueError("no starting point with R alpha > 0")

    def f(a, Ra_):
        return np.sum(np.log(Ra_)) - 0.5 * a @ M @ a

    val = f(alpha, Ra)
    for it in range(1, max_iter + 1):
        w = 1.0 / Ra
        grad = R.T @ w - M @ alpha
        H = (R * (w * w)[:, None]).T @ R + M
        step = np.linalg.lstsq(H, grad, rcond=None)[0]
        dec = float(grad @ step)
        if dec <= 1e-14 * max(1.0, abs(val)):
            return alpha, it, True
        t = 1.0
        dR = R @ step
        while True:
            Ra_new = Ra + t * dR
            if np.all(Ra_new > 0):
                a_new = alpha + t * step
                v_new = f(a_new, Ra_new)
                if v_new >= val + 0.25 * t * dec:
                    break
            t *= 0.5
            if t < 1e-14:
                return alpha, it, False
        alpha, Ra, val = a_new, Ra_new, v_new
    return alpha, max_iter, False


def bias_correct(problem: ScHeDsProblem, estimate: ScHeDsEstimate,
                 config: Optional[SolverConfig] = None, Y=None) -> ScHeDsEstimate:
    """Refit without penalty on the columns of the selected groups.

    With zero penalty the group-score constraints force the residual
    ``D_Y R alpha - X_S phi_S`` to be orthogonal to the selected columns, so
    ``phi_S`` is the least-squares fit of ``D_Y R alpha`` on ``X_S``.  The
    remaining variance-score and rotated-cone constraints then hold with
    equality exactly at the maximiser of the unpenalised likelihood in
    ``alpha``, which is computed by Newton's method in ``q`` dimensions.
    """
    Y = _check_Y(problem, Y)
    config = config or SolverConfig()
    if not estimate.selected_groups:
        est = replace(estimate, notes=list(estimate.notes) + ["empty support: bias correction skipped"])
        return est
    data = problem.data
    cols = np.sort(np.concatenate([data.partition.groups[k] for k in estimate.selected_groups]))
    if cols.size == 0:
        raise ValueError("reduced design is empty")
    XS = data.X[:, cols]
    R = data.R
    DYR = Y[:, None] * R
    B, *_ = np.linalg.lstsq(XS, DYR, rcond=None)  # phi_S = B alpha
    E = DYR - XS @ B
    M = E.T @ E
    if np.linalg.norm(M) <= 1e-12 * max(1.0, np.linalg.norm(DYR) ** 2):
        raise ValueError("reduced design interpolates the responses; scale is unbounded")
    alpha, iters, ok = _max_likelihood_scale(R, M, estimate.alpha_hat, max(100, config.max_iter))
    phi = np.zeros(data.p)
    phi[cols] = B @ alpha
    v = 1.0 / (R @ alpha)
    report = {"algorithm": "newton", "status": "optimal" if ok else "max_iter",
              "iterations": iters, "support_columns": int(cols.size)}
    est = _make_estimate(problem, phi, alpha, v, problem.geometry.group_norms(phi), report, stage=2,
                         notes=list(estimate.notes))
    # refit can only shrink the support
    est.selected_groups = [k for k in est.selected_groups if k in set(estimate.selected_groups)]
    return est


# -- prediction ------------------------------------------------------------------

def predict(estimate: ScHeDsEstimate, f_values, r_values, raw: bool = True):
    """Conditional mean ``(f . phi) / (r . alpha)`` and scale ``1 / (r . alpha)``.

    ``f_values`` may be one feature row (length p) or a matrix of rows.  With
    ``raw=True`` features are in original units and the recorded column
    scaling is applied first.  Returns ``(mean, sigma)``.
    """
    f = np.asarray(f_values, dtype=float)
    r = np.asarray(r_values, dtype=float)
    single = f.ndim == 1
    F = np.atleast_2d(f)
    Rv = np.atleast_2d(r)
    if F.shape[1] != estimate.phi_hat.size:
        raise ValueError(f"expected {estimate.phi_hat.size} features, got {F.shape[1]}")
    if Rv.shape[1] != estimate.alpha_hat.size:
        raise ValueError(f"expected {estimate.alpha_hat.size} variance features, got {Rv.shape[1]}")
    if raw and estimate.scaling is not None:
        F = estimate.scaling.apply(F)
    den = Rv @ estimate.alpha_hat
    if np.any(den <= 0):
        raise ValueError("non-positive scale denominator r . alpha")
    mean = (F @ estimate.phi_hat) / den
    sigma = 1.0 / den
    if single:
        return float(mean[0]), float(sigma[0])
    return mean, sigma
