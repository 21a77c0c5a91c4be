"""Algebra on products of nonnegative orthants and second-order cones.

Vectors are stacked as ``[linear part, cone_1, ..., cone_m]``.  Cones of
equal dimension are processed together through 2-D index arrays, so the
cost of every operation is a handful of numpy calls per distinct size.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

__all__ = ["ProductCone", "NTScaling", "soc_project"]


def soc_project(point, split: int = 0) -> np.ndarray:
    """Euclidean projection onto ``{(z, t) : ||z||_2 <= t}``.

    ``split`` is the index of the apex coordinate ``t`` within ``point``;
    the remaining entries form ``z`` in their original order.
    """
    point = np.asarray(point, dtype=float)
    t = point[split]
    z = np.delete(point, split)
    nz = np.linalg.norm(z)
    if nz <= t:
        return point.copy()
    if nz <= -t:
        return np.zeros_like(point)
    scale = 0.5 * (nz + t)
    out = np.insert(z * (scale / nz), split, scale)
    return out


class ProductCone:
    """Index bookkeeping and Jordan algebra for ``R_+^l x Q^{k_1} x ...``."""

    def __init__(self, n_lin: int, soc_dims):
        self.n_lin = int(n_lin)
        self.soc_dims = tuple(int(k) for k in soc_dims)
        self.m = self.n_lin + sum(self.soc_dims)
        self.degree = self.n_lin + len(self.soc_dims)
        starts = self.n_lin + np.concatenate([[0], np.cumsum(self.soc_dims)[:-1]]).astype(int) \
            if self.soc_dims else np.zeros(0, dtype=int)
        # one (count, k) index matrix per distinct cone size
        self.groups = []
        dims = np.array(self.soc_dims, dtype=int)
        for k in sorted(set(self.soc_dims)):
            first = starts[dims == k]
            self.groups.append(first[:, None] + np.arange(k)[None, :])
        e = np.zeros(self.m)
        e[: self.n_lin] = 1.0
        for idx in self.groups:
            e[idx[:, 0]] = 1.0
        self.e = e

    # -- Jordan algebra ---------------------------------------------------------
    def inner(self, x, y) -> float:
        return float(x @ y)

    def circ(self, x, y):
        out = np.empty(self.m)
        out[: self.n_lin] = x[: self.n_lin] * y[: self.n_lin]
        for idx in self.groups:
            X, Y = x[idx], y[idx]
            out[idx[:, 0]] = np.einsum("ij,ij->i", X, Y)
            out[idx[:, 1:]] = X[:, :1] * Y[:, 1:] + Y[:, :1] * X[:, 1:]
        return out

    def inv_circ(self, lam, b):
        """Solve ``lam o x = b`` for ``x`` (``lam`` in the cone interior)."""
        out = np.empty(self.m)
        out[: self.n_lin] = b[: self.n_lin] / lam[: self.n_lin]
        for idx in self.groups:
            L, B = lam[idx], b[idx]
            l0, l1 = L[:, 0], L[:, 1:]
            det = l0 ** 2 - np.einsum("ij,ij->i", l1, l1)
            x0 = (l0 * B[:, 0] - np.einsum("ij,ij->i", l1, B[:, 1:])) / det
            out[idx[:, 0]] = x0
            out[idx[:, 1:]] = (B[:, 1:] - x0[:, None] * l1) / l0[:, None]
        return out

    def jnorm(self, x):
        """Per-cone ``sqrt(x0^2 - ||x1||^2)`` (nan outside the cone)."""
        parts = []
        for idx in self.groups:
            X = x[idx]
            parts.append(X[:, 0] ** 2 - np.einsum("ij,ij->i", X[:, 1:], X[:, 1:]))
        return parts

    # -- membership, steps, projections ----------------------------------------
    def interior_margin(self, x) -> float:
        """Smallest ``t`` with ``x + t e`` on the cone boundary, negated.

        Positive means ``x`` is in the interior.
        """
        margins = [np.inf]
        if self.n_lin:
            margins.append(x[: self.n_lin].min())
        for idx in self.groups:
            X = x[idx]
            margins.append((X[:, 0] - np.linalg.norm(X[:, 1:], axis=1)).min())
        return float(min(margins))

    def max_step(self, x, dx) -> float:
        """Largest ``a >= 0`` with ``x + a dx`` in the cone (``x`` interior)."""
        alpha = np.inf
        if self.n_lin:
            d = dx[: self.n_lin]
            neg = d < 0
            if neg.any():
                alpha = min(alpha, float((-x[: self.n_lin][neg] / d[neg]).min()))
        for idx in self.groups:
            X, D = x[idx], dx[idx]
            xn2 = X[:, 0] ** 2 - np.einsum("ij,ij->i", X[:, 1:], X[:, 1:])
            scale = np.sqrt(np.maximum(xn2, 1e-300))
            X = X / scale[:, None]
            D = D / scale[:, None]
            a = D[:, 0] ** 2 - np.einsum("ij,ij->i", D[:, 1:], D[:, 1:])
            b = X[:, 0] * D[:, 0] - np.einsum("ij,ij->i", X[:, 1:], D[:, 1:])
            # roots of a t^2 + 2 b t + 1
            disc = b * b - a
            with np.errstate(divide="ignore", invalid="ignore"):
                sq = np.sqrt(np.maximum(disc, 0.0))
                q = -(b + np.where(b >= 0, sq, -sq))
                r1 = np.where(a != 0, q / a, np.inf)
                r2 = np.where(q != 0, 1.0 / q, np.inf)
            roots = np.stack([r1, r2], axis=1)
            roots = np.where((roots > 0) & np.isfinite(roots), roots, np.inf)
            step = roots.min(axis=1)
            step = np.where(disc < 0, np.where(a > 0, np.inf, step), step)
            if step.size:
                alpha = min(alpha, float(step.min()))
        return alpha

    def project(self, x):
        out = np.empty(self.m)
        out[: self.n_lin] = np.maximum(x[: self.n_lin], 0.0)
        for idx in self.groups:
            X = x[idx]
            t = X[:, 0]
            z = X[:, 1:]
            nz = np.linalg.norm(z, axis=1)
            scale = 0.5 * (nz + t)
            inside = nz <= t
            polar = nz <= -t
            with np.errstate(divide="ignore", invalid="ignore"):
                ratio = np.where(nz > 0, scale / nz, 0.0)
            P = np.empty_like(X)
            P[:, 0] = scale
            P[:, 1:] = z * ratio[:, None]
            P[inside] = X[inside]
            P[polar] = 0.0
            out[idx] = P
        return out

    def block_max(self, values):
        """Per-entry maximum of ``values`` over each cone block (linear rows kept)."""
        out = values.copy()
        for idx in self.groups:
            out[idx] = values[idx].max(axis=1, keepdims=True)
        return out


class NTScaling:
    """Nesterov-Todd scaling ``W`` with ``W z = W^{-1} s = lam``.

    On the orthant ``W = diag(sqrt(s / z))``.  On a second-order cone
    ``W = beta (2 v v^T - J)`` with ``J = diag(1, -I)``, ``v^T J v = 1`` and
    ``W^{-1} = (2 J v v^T J - J) / beta``.
    """

    def __init__(self, cone: ProductCone, s, z):
        self.cone = cone
        nl = cone.n_lin
        self.d = np.sqrt(s[:nl] / z[:nl])
        self.beta = []
        self.v = []
        for idx in cone.groups:
            S, Z = s[idx], z[idx]
            sn = np.sqrt(S[:, 0] ** 2 - np.einsum("ij,ij->i", S[:, 1:], S[:, 1:]))
            zn = np.sqrt(Z[:, 0] ** 2 - np.einsum("ij,ij->i", Z[:, 1:], Z[:, 1:]))
            Sb = S / sn[:, None]
            Zb = Z / zn[:, None]
            gamma = np.sqrt(0.5 * (1.0 + np.einsum("ij,ij->i", Sb, Zb)))
            Zb[:, 1:] *= -1.0  # J z
            w = (Sb + Zb) / (2.0 * gamma[:, None])
            v = w.copy()
            v[:, 0] += 1.0
            v /= np.sqrt(2.0 * (w[:, 0] + 1.0))[:, None]
            self.beta.append(np.sqrt(sn / zn))
            self.v.append(v)
        self.lam = self.apply(z)

    def updated(self, s_scaled, z_scaled) -> "NTScaling":
        """Scaling for the new iterate from its scaled images.

        ``s_scaled = W^{-1} s_new`` and ``z_scaled = W z_new`` stay well
        centred, so their scaling is computed to full precision and then
        composed with ``W``.  For a cone block with old point ``v0`` and
        scaled point ``v1`` the composed scaling point is the Jordan square
        root of ``P(v0) (v1 o v1)``.
        """
        step = NTScaling(self.cone, s_scaled, z_scaled)
        new = object.__new__(NTScaling)
        new.cone = self.cone
        new.d = self.d * step.d
        new.beta = [b0 * b1 for b0, b1 in zip(self.beta, step.beta)]
        new.v = []
        for v0, v1 in zip(self.v, step.v):
            sq = np.empty_like(v1)
            sq[:, 0] = np.einsum("ij,ij->i", v1, v1)
            sq[:, 1:] = 2.0 * v1[:, :1] * v1[:, 1:]
            # P(v0) x = 2 v0 (v0^T x) - J x
            u = 2.0 * v0 * np.einsum("ij,ij->i", v0, sq)[:, None]
            u[:, 0] -= sq[:, 0]
            u[:, 1:] += sq[:, 1:]
            v = u.copy()
            v[:, 0] += 1.0
            v /= np.sqrt(2.0 * (u[:, 0] + 1.0))[:, None]
            new.v.append(v)
        # lam_new = R lam_step with R = P(v) P(J v0) P(J v1) orthogonal and
        # fixing e; its first entry and block norm are kept exactly
        lam = step.lam.copy()
        for idx, v0, v1, v in zip(self.cone.groups, self.v, step.v, new.v):
            L = lam[idx]
            X = L
            for b, flip in ((v1, True), (v0, True), (v, False)):
                bb = b.copy()
                if flip:
                    bb[:, 1:] *= -1.0
                proj = np.einsum("ij,ij->i", bb, X)
                Y = 2.0 * bb * proj[:, None]
                Y[:, 0] -= X[:, 0]
                Y[:, 1:] += X[:, 1:]
                X = Y
            rot = X[:, 1:]
            norm_in = np.linalg.norm(L[:, 1:], axis=1)
            norm_out = np.linalg.norm(rot, axis=1)
            with np.errstate(divide="ignore", invalid="ignore"):
                fix = np.where(norm_out > 0, norm_in / norm_out, 1.0)
            lam[idx[:, 1:]] = rot * fix[:, None]
        new.lam = lam
        return new

    def inverse_square_parts(self):
        """``W^{-2} = diag(sdiag) + Z Z^T`` with ``Z`` sparse, one column per cone.

        On a cone ``W^{-2} = (2 w w^T - J) / beta^2`` where ``w = (J v) o (J v)``.
        """
        m = self.cone.m
        nl = self.cone.n_lin
        sdiag = np.empty(m)
        sdiag[:nl] = 1.0 / self.d ** 2
        rows, cols, vals = [], [], []
        col = 0
        for idx, beta, v in zip(self.cone.groups, self.beta, self.v):
            count, k = idx.shape
            inv_b2 = 1.0 / beta ** 2
            sdiag[idx[:, 0]] = -inv_b2
            sdiag[idx[:, 1:]] = inv_b2[:, None]
            w = np.empty_like(v)
            w[:, 0] = np.einsum("ij,ij->i", v, v)
            w[:, 1:] = -2.0 * v[:, :1] * v[:, 1:]
            w *= (np.sqrt(2.0) / beta)[:, None]
            rows.append(idx.ravel())
            cols.append(np.repeat(np.arange(col, col + count), k))
            vals.append(w.ravel())
            col += count
        if rows:
            Z = sp.csc_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                              shape=(m, col))
        else:
            Z = sp.csc_matrix((m, 0))
        return sdiag, Z

    def _soc(self, x, inverse: bool, out):
        for idx, beta, v in zip(self.cone.groups, self.beta, self.v):
            X = x[idx]
            if x.ndim == 1:
                # X: (count, k)
                if inverse:
                    Jv = v.copy()
                    Jv[:, 1:] *= -1.0
                    JX = X.copy()
                    JX[:, 1:] *= -1.0
                    res = 2.0 * Jv * np.einsum("ij,ij->i", Jv, X)[:, None] - JX
                    res /= beta[:, None]
                else:
                    JX = X.copy()
                    JX[:, 1:] *= -1.0
                    res = 2.0 * v * np.einsum("ij,ij->i", v, X)[:, None] - JX
                    res *= beta[:, None]
                out[idx] = res
            else:
                # X: (count, k, ncol)
                if inverse:
                    Jv = v.copy()
                    Jv[:, 1:] *= -1.0
                    proj = np.einsum("ij,ijc->ic", Jv, X)
                    res = 2.0 * Jv[:, :, None] * proj[:, None, :]
                    res[:, 0, :] -= X[:, 0, :]
                    res[:, 1:, :] += X[:, 1:, :]
                    res /= beta[:, None, None]
                else:
                    proj = np.einsum("ij,ijc->ic", v, X)
                    res = 2.0 * v[:, :, None] * proj[:, None, :]
                    res[:, 0, :] -= X[:, 0, :]
                    res[:, 1:, :] += X[:, 1:, :]
                    res *= beta[:, None, None]
                out[idx] = res
        return out

    def apply(self, x):
        """``W x`` for a vector or a matrix whose rows follow the cone layout."""
        out = np.empty_like(x, dtype=float)
        nl = self.cone.n_lin
        if x.ndim == 1:
            out[:nl] = self.d * x[:nl]
        else:
            out[:nl] = self.d[:, None] * x[:nl]
        return self._soc(x, False, out)

    def apply_inv(self, x):
        out = np.empty_like(x, dtype=float)
        nl = self.cone.n_lin
        if x.ndim == 1:
            out[:nl] = x[:nl] / self.d
        else:
            out[:nl] = x[:nl] / self.d[:, None]
        return self._soc(x, True, out)
