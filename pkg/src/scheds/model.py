"""Problem data for heteroscedastic group-sparse regression.

``RegressionData`` bundles the design ``X`` (T x p), responses ``Y``, the
variance dictionary ``R`` (T x q, non-negative) and a partition of the
columns of ``X`` into groups.  ``group_geometry`` stores each group's column
space as a thin orthonormal basis ``Q_k``; the projector onto that space is
``Q_k Q_k^T`` but is never formed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

__all__ = [
    "GroupPartition",
    "RegressionData",
    "GroupGeometry",
    "ColumnScaling",
    "group_geometry",
    "validate",
    "normalize_columns",
    "RANK_CUTOFF",
]

RANK_CUTOFF = 1e-10  # relative to the largest singular value of the block


def _readonly(a, dtype=float):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class GroupPartition:
    """Groups of column indices; ``check(p)`` verifies they partition ``range(p)``."""

    groups: tuple

    def __init__(self, groups: Sequence[Sequence[int]]):
        object.__setattr__(self, "groups", tuple(_readonly(g, dtype=int) for g in groups))

    @property
    def K(self) -> int:
        return len(self.groups)

    @property
    def p(self) -> int:
        return int(sum(g.size for g in self.groups))

    @classmethod
    def singletons(cls, p: int) -> "GroupPartition":
        return cls([[j] for j in range(p)])

    @classmethod
    def contiguous(cls, sizes: Sequence[int]) -> "GroupPartition":
        edges = np.concatenate([[0], np.cumsum(sizes)])
        return cls([range(a, b) for a, b in zip(edges[:-1], edges[1:])])

    def violations(self, p: int) -> list[str]:
        out = []
        seen = np.zeros(p, dtype=int)
        for k, g in enumerate(self.groups):
            if g.size == 0:
                out.append(f"group {k} is empty")
                continue
            bad = g[(g < 0) | (g >= p)]
            if bad.size:
                out.append(f"group {k} has index {int(bad[0])} outside [0, {p})")
            np.add.at(seen, g[(g >= 0) & (g < p)], 1)
        dup = np.flatnonzero(seen > 1)
        if dup.size:
            out.append(f"partition overlap at index {int(dup[0])}")
        missing = np.flatnonzero(seen == 0)
        if missing.size:
            out.append(f"partition incomplete: index {int(missing[0])} not covered")
        return out

    def check(self, p: int) -> None:
        bad = self.violations(p)
        if bad:
            raise ValueError("; ".join(bad))

    def group_of(self) -> np.ndarray:
        """Group id of every column."""
        out = np.empty(self.p, dtype=int)
        for k, g in enumerate(self.groups):
            out[g] = k
        return out

    def to_list(self) -> list:
        return [g.tolist() for g in self.groups]


@dataclass(frozen=True)
class ColumnScaling:
    """Record of a column normalisation ``X_scaled = X / scale``.

    Coefficients fitted on the scaled design map back through
    ``phi_raw = phi_scaled / scale``.
    """

    scale: np.ndarray

    def to_raw(self, coef):
        return np.asarray(coef, dtype=float) / self.scale

    def to_scaled(self, coef):
        return np.asarray(coef, dtype=float) * self.scale

    def apply(self, X):
        return np.asarray(X, dtype=float) / self.scale

    def to_dict(self) -> dict:
        return {"scale": self.scale.tolist()}

    @classmethod
    def from_dict(cls, d) -> "ColumnScaling":
        return cls(_readonly(d["scale"]))


def normalize_columns(X, target: Optional[float] = None):
    """Rescale columns of ``X`` to Euclidean norm ``target`` (default sqrt(T)).

    Zero columns are left untouched.  Returns ``(X_scaled, ColumnScaling)``.
    """
    X = np.asarray(X, dtype=float)
    target = np.sqrt(X.shape[0]) if target is None else float(target)
    norms = np.linalg.norm(X, axis=0)
    scale = np.where(norms > 0, norms / target, 1.0)
    rec = ColumnScaling(_readonly(scale))
    return rec.apply(X), rec


@dataclass(frozen=True)
class RegressionData:
    X: np.ndarray
    Y: np.ndarray
    R: np.ndarray
    partition: GroupPartition
    scaling: Optional[ColumnScaling] = field(default=None)

    def __post_init__(self):
        X = _readonly(np.atleast_2d(self.X))
        Y = _readonly(np.ravel(self.Y))
        R = np.asarray(self.R, dtype=float)
        R = _readonly(R.reshape(-1, 1) if R.ndim == 1 else R)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)
        object.__setattr__(self, "R", R)

    @property
    def T(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    @property
    def q(self) -> int:
        return self.R.shape[1]

    @property
    def K(self) -> int:
        return self.partition.K

    def with_response(self, Y) -> "RegressionData":
        return RegressionData(self.X, Y, self.R, self.partition, self.scaling)


def validate(data: RegressionData) -> list[str]:
    """All invariant breaches of ``data`` as messages; empty when well formed."""
    out = []
    T, p = data.X.shape
    if T < 1 or p < 1:
        out.append(f"X must be non-empty, got shape {data.X.shape}")
    if data.Y.size != T:
        out.append(f"row count mismatch: X has {T} rows, Y has {data.Y.size}")
    if data.R.shape[0] != T:
        out.append(f"row count mismatch: X has {T} rows, R has {data.R.shape[0]}")
    if data.R.shape[1] < 1:
        out.append("R must have at least one column")
    for name, arr in (("X", data.X), ("Y", data.Y), ("R", data.R)):
        if not np.all(np.isfinite(arr)):
            out.append(f"{name} has non-finite entries")
    neg = np.argwhere(data.R < 0)
    for t, l in neg[:10]:
        out.append(f"R non-negativity at ({int(t)},{int(l)})")
    if len(neg) > 10:
        out.append(f"R non-negativity: {len(neg) - 10} further entries")
    out.extend(data.partition.violations(p))
    return out


@dataclass(frozen=True)
class GroupGeometry:
    """Per-group rank ``r_k``, orthonormal basis ``Q_k`` and ``Q_k^T X_{G_k}``."""

    ranks: np.ndarray
    bases: tuple
    coef: tuple  # Q_k^T X_{:,G_k}, shape (r_k, |G_k|)
    partition: GroupPartition

    @property
    def K(self) -> int:
        return len(self.bases)

    def projector(self, k: int) -> np.ndarray:
        Q = self.bases[k]
        return Q @ Q.T

    def project_norms(self, z) -> np.ndarray:
        """``||Pi_{G_k} z||_2`` for every group."""
        z = np.asarray(z, dtype=float)
        return np.array([np.linalg.norm(Q.T @ z) for Q in self.bases])

    def group_norms(self, phi) -> np.ndarray:
        """``||X_{G_k} phi_{G_k}||_2`` for every group."""
        phi = np.asarray(phi, dtype=float)
        return np.array([np.linalg.norm(C @ phi[g])
                         for C, g in zip(self.coef, self.partition.groups)])

    def sparsity_index(self, support) -> int:
        """Sum of ranks over the groups in ``support``."""
        return int(sum(self.ranks[k] for k in support))


def group_geometry(X, partition: GroupPartition) -> GroupGeometry:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError("X must be a matrix")
    bad = partition.violations(X.shape[1])
    if bad:
        raise ValueError("partition does not match X: " + "; ".join(bad))
    ranks, bases, coef = [], [], []
    for g in partition.groups:
        block = X[:, g]
        U, sv, Vt = np.linalg.svd(block, full_matrices=False)
        r = int(np.sum(sv > RANK_CUTOFF * sv[0])) if sv.size and sv[0] > 0 else 0
        Q = _readonly(U[:, :r])
        ranks.append(r)
        bases.append(Q)
        coef.append(_readonly(sv[:r, None] * Vt[:r]))
    return GroupGeometry(_readonly(ranks, dtype=int), tuple(bases), tuple(coef), partition)
