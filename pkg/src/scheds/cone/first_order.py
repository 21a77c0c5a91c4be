"""Operator-splitting first-order method for second-order cone programs.

Primal-dual hybrid gradient (a preconditioned Douglas-Rachford splitting)
on the saddle problem

    min_x max_{y in K}  c^T x + y^T (G x - h)

with diagonal Ruiz / Pock-Chambolle preconditioning, adaptive restarts to
the running average and primal-weight balancing.  Each iteration costs one
product with ``G`` and one with ``G^T`` plus a cone projection, so it stays
linear in the data size when ``G`` is stored in factored form.
"""

from __future__ import annotations

import logging
import time

import numpy as np

from .cones import ProductCone
from .program import ConeProgram, residuals
from .solution import ConeSolution

log = logging.getLogger(__name__)

CHECK_EVERY = 64
RUIZ_ITERS = 10
POWER_ITERS = 60
STEP_SAFETY = 0.9
_DENSE_LIMIT = 4e7  # entries of |G| formed for preconditioning
_RESTART_SUFFICIENT = 0.2
_RESTART_NECESSARY = 0.8
_RESTART_ARTIFICIAL = 0.36
_BLOWUP = 1e13


def _block_reduce(values, cone, reduce):
    """Collapse per-row values to one value per cone block (kept per row)."""
    out = values.copy()
    for idx in cone.groups:
        out[idx] = reduce(values[idx], axis=1)[:, None]
    return out


def _preconditioner(G, cone, dense_ok):
    """Row scale ``d`` (constant on each cone) and column scale ``e``."""
    m, n = G.shape
    d = np.ones(m)
    e = np.ones(n)
    if not dense_ok or m == 0:
        return d, e
    A = np.abs(G.toarray())
    for _ in range(RUIZ_ITERS):
        B = A * d[:, None] * e[None, :]
        rmax = _block_reduce(B.max(axis=1), cone, np.max)
        cmax = B.max(axis=0)
        rmax[rmax == 0] = 1.0
        cmax[cmax == 0] = 1.0
        d /= np.sqrt(rmax)
        e /= np.sqrt(cmax)
    # Pock-Chambolle with alpha = 1
    B = A * d[:, None] * e[None, :]
    rsum = _block_reduce(B.sum(axis=1), cone, np.max)
    csum = B.sum(axis=0)
    rsum[rsum == 0] = 1.0
    csum[csum == 0] = 1.0
    return d / np.sqrt(rsum), e / np.sqrt(csum)


def _norm_estimate(mv, rmv, n):
    """Largest singular value by power iteration from a fixed start."""
    x = np.cos(np.arange(1, n + 1)) + 1.5
    x /= np.linalg.norm(x)
    est = 0.0
    for _ in range(POWER_ITERS):
        y = rmv(mv(x))
        nrm = np.linalg.norm(y)
        if nrm == 0:
            return 0.0
        est_new = np.sqrt(nrm)
        x = y / nrm
        if abs(est_new - est) <= 1e-4 * est_new:
            est = est_new
            break
        est = est_new
    return est


def first_order(program: ConeProgram, tol: float = 1e-5, max_iter: int = 50000,
                verbose: bool = False) -> ConeSolution:
    with np.errstate(over="ignore", invalid="ignore"):
        return _first_order(program, tol, max_iter, verbose)


def _first_order(program, tol, max_iter, verbose):
    cone = ProductCone(program.n_lin, program.soc_dims)
    G = program.G
    c, h = program.c, program.h
    m, n = G.shape
    nrm_c = float(np.linalg.norm(c))

    d, e = _preconditioner(G, cone, m * n <= _DENSE_LIMIT)
    cs, hs = e * c, d * h

    def mv(x):  # scaled G
        return d * G.matvec(e * x)

    def rmv(y):
        return e * G.rmatvec(d * y)

    def measures(xs, ys):
        x = e * xs
        y = d * ys
        pcost = float(c @ x)
        dcost = float(-h @ y)
        lin_v, soc_v = residuals(program, x)
        primal = max(lin_v, soc_v)
        dres = float(np.linalg.norm(G.rmatvec(y) + c)) / (1.0 + nrm_c)
        denom = 1.0 + abs(pcost)
        slack = h - G.matvec(x)
        comp = abs(float(slack @ y)) / denom
        gap_proxy = max(dres, abs(pcost - dcost) / denom, comp)
        return x, pcost, primal, gap_proxy

    def kkt_error(xs, ys, weight):
        r = hs - mv(xs)
        pres = np.linalg.norm(r - cone.project(r))
        dres = np.linalg.norm(cs + rmv(ys))
        gap = abs(float(cs @ xs + hs @ ys))
        return np.sqrt(weight ** 2 * pres ** 2 + dres ** 2 / weight ** 2 + gap ** 2)

    xs = np.zeros(n)
    ys = np.zeros(m)
    if m == 0:
        status = "optimal" if not np.any(c) else "infeasible_suspected"
        return ConeSolution(x=xs, status=status, objective=0.0, primal_residual=0.0,
                            gap_proxy=0.0 if status == "optimal" else np.inf, iterations=0,
                            seconds_per_iteration=0.0, algorithm="first_order", z=ys)

    norm = _norm_estimate(mv, rmv, n)
    eta = STEP_SAFETY / max(norm, 1e-12)
    nc, nh = np.linalg.norm(cs), np.linalg.norm(hs)
    weight = nc / nh if nc > 1e-10 and nh > 1e-10 else 1.0

    x_start, y_start = xs.copy(), ys.copy()
    x_sum, y_sum = np.zeros(n), np.zeros(m)
    n_avg = 0
    kkt_last_restart = kkt_error(xs, ys, weight)
    kkt_prev_candidate = np.inf
    since_restart = 0

    start = time.perf_counter()
    status = "max_iter"
    iters = 0
    Gx = mv(xs)
    while True:
        if iters % CHECK_EVERY == 0 or iters == max_iter:
            # candidate: current iterate or running average, whichever is better
            if n_avg:
                xa, ya = x_sum / n_avg, y_sum / n_avg
                ka, kc = kkt_error(xa, ya, weight), kkt_error(xs, ys, weight)
                if ka < kc:
                    cand, kcand = (xa, ya), ka
                else:
                    cand, kcand = (xs, ys), kc
            else:
                cand, kcand = (xs, ys), kkt_error(xs, ys, weight)
            x, pcost, primal, gap_proxy = measures(*cand)
            xinf = float(np.abs(x).max(initial=0.0))
            if verbose:
                log.info("ofo %6d pcost % .8e primal %.2e gap %.2e weight %.2e",
                         iters, pcost, primal, gap_proxy, weight)
            if primal <= tol * (1.0 + xinf) and gap_proxy <= tol:
                xs, ys = cand
                status = "optimal"
                break
            if iters >= max_iter:
                xs, ys = cand
                break
            if not np.isfinite(kcand) or xinf > _BLOWUP * (1.0 + np.abs(h).max()):
                status = "infeasible_suspected"
                break
            restart = (
                kcand <= _RESTART_SUFFICIENT * kkt_last_restart
                or (kcand <= _RESTART_NECESSARY * kkt_last_restart and kcand > kkt_prev_candidate)
                or since_restart >= _RESTART_ARTIFICIAL * iters
            ) and since_restart > 0
            kkt_prev_candidate = kcand
            if restart:
                xs, ys = (c_.copy() for c_ in cand)
                dx = np.linalg.norm(xs - x_start)
                dy = np.linalg.norm(ys - y_start)
                if dx > 1e-10 and dy > 1e-10:
                    weight = np.exp(0.5 * np.log(dy / dx) + 0.5 * np.log(weight))
                x_start, y_start = xs.copy(), ys.copy()
                x_sum[:] = 0.0
                y_sum[:] = 0.0
                n_avg = 0
                kkt_last_restart = kkt_error(xs, ys, weight)
                kkt_prev_candidate = np.inf
                since_restart = 0
                Gx = mv(xs)

        tau, sigma = eta / weight, eta * weight
        x_new = xs - tau * (cs + rmv(ys))
        Gx_new = mv(x_new)
        ys = cone.project(ys + sigma * (2.0 * Gx_new - Gx - hs))
        xs, Gx = x_new, Gx_new
        x_sum += xs
        y_sum += ys
        n_avg += 1
        since_restart += 1
        iters += 1
    elapsed = time.perf_counter() - start
    x, pcost, primal, gap_proxy = measures(xs, ys)
    return ConeSolution(x=x, status=status, objective=pcost, primal_residual=primal,
                        gap_proxy=gap_proxy, iterations=iters,
                        seconds_per_iteration=elapsed / iters if iters else 0.0,
                        algorithm="first_order", z=d * ys)
