"""Primal-dual interior-point method for second-order cone programs.

Infeasible-start path following on

    primal:  min c^T x   s.t.  G x + s = h,  s in K
    dual:    max -h^T z  s.t.  G^T z + c = 0,  z in K

with Nesterov-Todd scaling and Mehrotra predictor-corrector steps.  Each
iteration assembles the normal matrix ``G^T W^{-2} G`` block by block
(``W^{-2}`` as diagonal plus one rank-one term per cone) and factors it
densely; Newton directions are refined on the unreduced system.
"""

from __future__ import annotations

import logging
import time

import numpy as np
import scipy.linalg as sla

from .cones import NTScaling, ProductCone
from .program import BlockRows, ConeProgram, residuals
from .solution import ConeSolution

log = logging.getLogger(__name__)

STEP_FRACTION = 0.99
KKT_REFINE = 3
_BLOWUP = 1e13


class _Breakdown(Exception):
    pass


def _factor(H):
    """Cholesky of ``H``, regularised as needed for rank-deficient ``G``."""
    scale = max(float(np.max(np.abs(np.diag(H)))), 1e-300)
    for delta in (0.0, 1e-14, 1e-12, 1e-10, 1e-8):
        try:
            reg = H if delta == 0.0 else H + (delta * scale) * np.eye(H.shape[0])
            return sla.cho_factor(reg, lower=False, check_finite=False)
        except (sla.LinAlgError, ValueError):
            continue
    raise _Breakdown("normal matrix is not positive definite")


def _solve(H, factor, rhs, refine=2):
    x = sla.cho_solve(factor, rhs, check_finite=False)
    for _ in range(refine):
        r = rhs - H @ x
        x = x + sla.cho_solve(factor, r, check_finite=False)
    return x


def _operator(program, cone):
    """``program.G`` as a :class:`BlockRows`; merged into one dense block if a
    cone straddles a block boundary (the block Gram assembly needs whole cones)."""
    G = program.G
    cuts = set(G._offsets)
    start = program.n_lin
    for k in program.soc_dims:
        if any(start < b < start + k for b in cuts):
            return BlockRows([G.toarray()], G.n)
        start += k
    return G


def _measures(program, G, x, s, z, nrm_c):
    c, h = program.c, program.h
    pcost = float(c @ x)
    dcost = float(-h @ z)
    rx = G.rmatvec(z) + c
    gap = float(s @ z)
    lin_v, soc_v = residuals(program, x)
    primal = max(lin_v, soc_v)
    dres = float(np.linalg.norm(rx)) / (1.0 + nrm_c)
    denom = 1.0 + abs(pcost)
    gap_proxy = max(dres, abs(pcost - dcost) / denom, max(gap, 0.0) / denom)
    return pcost, dcost, primal, gap_proxy


def interior_point(program: ConeProgram, tol: float = 1e-8, max_iter: int = 200,
                   verbose: bool = False) -> ConeSolution:
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        return _interior_point(program, tol, max_iter, verbose)


def _interior_point(program, tol, max_iter, verbose):
    cone = ProductCone(program.n_lin, program.soc_dims)
    G = _operator(program, cone)
    c, h = program.c, program.h
    m, n = G.shape
    nrm_c = float(np.linalg.norm(c))

    def finish(x, s, z, status, iters, elapsed):
        pcost, _, primal, gap_proxy = _measures(program, G, x, s, z, nrm_c)
        spi = elapsed / iters if iters else 0.0
        return ConeSolution(x=x, status=status, objective=pcost, primal_residual=primal,
                            gap_proxy=gap_proxy, iterations=iters,
                            seconds_per_iteration=spi, algorithm="interior_point", z=z)

    if m == 0:
        x = np.zeros(n)
        status = "optimal" if not np.any(c) else "infeasible_suspected"
        return finish(x, np.zeros(0), np.zeros(0), status, 0, 0.0)

    # starting point: least-squares primal, least-norm dual, shifted into K
    try:
        H0 = G.gram(np.ones(m))
        f0 = _factor(H0)
        x = _solve(H0, f0, G.rmatvec(h))
        s = h - G.matvec(x)
        z = -G.matvec(_solve(H0, f0, c))
    except _Breakdown:
        x = np.zeros(n)
        s = h.copy()
        z = np.zeros(m)
    for vec in (s, z):
        margin = cone.interior_margin(vec)
        if margin <= 1e-8 * max(1.0, np.abs(vec).max(initial=0.0)):
            vec += (1.0 - margin) * cone.e

    start = time.perf_counter()
    status = "max_iter"
    iters = 0
    stalls = 0
    W = None
    best, best_score = None, np.inf
    for it in range(max_iter + 1):
        pcost, dcost, primal, gap_proxy = _measures(program, G, x, s, z, nrm_c)
        xinf = float(np.abs(x).max(initial=0.0))
        score = max(primal / (1.0 + xinf), gap_proxy)
        if np.isfinite(score) and score < best_score:
            best, best_score = (x, s, z), score
        if verbose:
            log.info("ip %3d pcost % .8e dcost % .8e primal %.2e gap %.2e",
                     it, pcost, dcost, primal, gap_proxy)
        if primal <= tol * (1.0 + xinf) and gap_proxy <= tol:
            status = "optimal"
            break
        if it == max_iter:
            break
        if xinf > _BLOWUP * (1.0 + np.abs(h).max()) or np.abs(z).max() > _BLOWUP * (1.0 + nrm_c):
            status = "infeasible_suspected"
            break
        iters += 1
        rx = G.rmatvec(z) + c
        rz = G.matvec(x) + s - h
        gap = float(s @ z)
        mu = gap / cone.degree
        try:
            if W is None:
                W = NTScaling(cone, s, z)
            lam = W.lam
            if not np.all(np.isfinite(lam)):
                raise _Breakdown("scaling lost interiority")
            H = G.gram(*W.inverse_square_parts())
            fac = _factor(H)
        except (_Breakdown, FloatingPointError) as exc:
            log.debug("interior point breakdown: %s", exc)
            status = "infeasible_suspected"
            break

        def kkt(bx, bz, bs):
            # scaled system: WiG^T wdz = r1, WiG dx + wids = r2, wids + wdz = r3,
            # solved through the normal equations and refined on the full system
            r1, r2, r3 = bx, W.apply_inv(bz), cone.inv_circ(lam, bs)
            dx = np.zeros(n)
            wids = np.zeros(m)
            wdz = np.zeros(m)
            e1, e2, e3 = r1, r2, r3
            for _ in range(KKT_REFINE + 1):
                cx = _solve(H, fac, e1 - G.rmatvec(W.apply_inv(e3 - e2)), refine=0)
                cz = W.apply_inv(G.matvec(cx)) + e3 - e2
                dx += cx
                wdz += cz
                wids += e3 - cz
                e1 = r1 - G.rmatvec(W.apply_inv(wdz))
                e2 = r2 - W.apply_inv(G.matvec(dx)) - wids
                e3 = r3 - wids - wdz
            return dx, W.apply(wids), W.apply_inv(wdz), wids, wdz

        lamsq = cone.circ(lam, lam)
        dx, ds, dz, wids, wdz = kkt(-rx, -rz, -lamsq)
        a_aff = min(1.0, cone.max_step(lam, wids), cone.max_step(lam, wdz))
        sigma = (1.0 - a_aff) ** 3
        bs = -lamsq - cone.circ(wids, wdz) + sigma * mu * cone.e
        dx, ds, dz, wids, wdz = kkt(-rx, -rz, bs)
        a_max = min(cone.max_step(lam, wids), cone.max_step(lam, wdz))
        alpha = min(1.0, STEP_FRACTION * a_max)
        if not np.isfinite(alpha) or not np.all(np.isfinite(dx)):
            status = "infeasible_suspected"
            break
        x = x + alpha * dx
        s = s + alpha * ds
        z = z + alpha * dz
        try:
            W = W.updated(lam + alpha * wids, lam + alpha * wdz)
        except FloatingPointError:
            W = None
        if not all(np.all(np.isfinite(b)) for b in W.beta) or not np.all(np.isfinite(W.lam)):
            W = None
        stalls = stalls + 1 if alpha < 1e-8 else 0
        if stalls >= 5:
            status = "infeasible_suspected"
            break
    elapsed = time.perf_counter() - start
    if status != "optimal" and best is not None:
        # numerical trouble late in the run: fall back to the best iterate
        x, s, z = best
        if best_score <= tol:
            status = "optimal"
    return finish(x, s, z, status, iters, elapsed)
