"""Standard-form second-order cone programs.

A program is stored in stacked form::

    minimize    c^T x
    subject to  h - G x in K,    K = R_+^{n_lin} x Q^{k_1} x ... x Q^{k_m}

where ``Q^k = {(s0, s1) : s0 >= ||s1||_2}``.  The user-facing constraint
lists are

* linear rows ``a^T x <= b``  (``G`` row ``a``, ``h`` entry ``b``), and
* cones ``||A x + b||_2 <= d^T x + e``  (``G`` rows ``[-d; -A]``, ``h``
  entries ``[e; b]``).

``G`` may be a dense array, a sparse matrix or a :class:`BlockRows` map
whose blocks are products of two factors; the latter keeps matrix-vector
products linear in the data size for structured programs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp

__all__ = [
    "BlockRows",
    "ConeProgram",
    "constraint_violations",
    "residuals",
    "dump_program",
    "load_program",
]


def _as_operand(block):
    if sp.issparse(block):
        return block.tocsr()
    return np.asarray(block, dtype=float)


class BlockRows:
    """Row-stacked linear map built from dense, sparse or factored blocks.

    Each block is either a matrix or a pair ``(left, right)`` standing for
    the product ``left @ right``.  All blocks share the column count.
    """

    def __init__(self, blocks: Sequence, n: int):
        self.n = int(n)
        self._blocks = []
        self._offsets = [0]
        for block in blocks:
            if isinstance(block, tuple):
                left, right = (_as_operand(b) for b in block)
                if left.shape[1] != right.shape[0]:
                    raise ValueError("factor shapes do not chain")
                if right.shape[1] != self.n:
                    raise ValueError(f"block has {right.shape[1]} columns, expected {self.n}")
                rows = left.shape[0]
                self._blocks.append((left, right))
            else:
                mat = _as_operand(block)
                if mat.ndim != 2 or mat.shape[1] != self.n:
                    raise ValueError(f"block has shape {mat.shape}, expected (*, {self.n})")
                rows = mat.shape[0]
                self._blocks.append(mat)
            self._offsets.append(self._offsets[-1] + rows)
        self.m = self._offsets[-1]

    @property
    def shape(self):
        return (self.m, self.n)

    def matvec(self, x):
        out = np.empty(self.m)
        for (lo, hi), block in zip(zip(self._offsets, self._offsets[1:]), self._blocks):
            if lo == hi:
                continue
            if isinstance(block, tuple):
                out[lo:hi] = block[0] @ (block[1] @ x)
            else:
                out[lo:hi] = block @ x
        return out

    def rmatvec(self, y):
        out = np.zeros(self.n)
        for (lo, hi), block in zip(zip(self._offsets, self._offsets[1:]), self._blocks):
            if lo == hi:
                continue
            if isinstance(block, tuple):
                out += block[1].T @ (block[0].T @ y[lo:hi])
            else:
                out += block.T @ y[lo:hi]
        return out

    def gram(self, s, Z=None) -> np.ndarray:
        """Dense ``G^T diag(s) G + (G^T Z)(G^T Z)^T``.

        ``Z`` is a sparse ``m x c`` matrix whose columns each live inside one
        block.  Factored blocks ``L @ M`` are reduced through ``L^T diag(s) L``
        on the non-zero columns of ``M``.
        """
        H = np.zeros((self.n, self.n))
        Zr = None if Z is None else sp.csr_matrix(Z)
        for (lo, hi), block in zip(zip(self._offsets, self._offsets[1:]), self._blocks):
            if lo == hi:
                continue
            sb = s[lo:hi]
            Zb = None
            if Zr is not None:
                Zb = Zr[lo:hi]
                keep = np.flatnonzero(Zb.getnnz(axis=0))
                Zb = Zb[:, keep] if keep.size else None
            if isinstance(block, tuple):
                left, right = block
                cols = self._support(right)
                Rc = right[:, cols]
                Rc = Rc.toarray() if sp.issparse(Rc) else Rc
                Ls = left * sb[:, None] if not sp.issparse(left) else sp.diags(sb) @ left
                core = left.T @ Ls
                core = core.toarray() if sp.issparse(core) else core
                sub = Rc.T @ core @ Rc
                if Zb is not None:
                    LZ = (Zb.T @ left).T if not sp.issparse(left) else (left.T @ Zb).toarray()
                    A = Rc.T @ np.asarray(LZ)
                    sub += A @ A.T
                H[np.ix_(cols, cols)] += sub
            elif sp.issparse(block):
                Hb = block.T @ sp.diags(sb) @ block
                if Zb is not None:
                    A = block.T @ Zb
                    Hb = Hb + A @ A.T
                Hb = Hb.tocoo()
                np.add.at(H, (Hb.row, Hb.col), Hb.data)
            else:
                H += block.T @ (block * sb[:, None])
                if Zb is not None:
                    A = np.asarray((Zb.T @ block)).T
                    H += A @ A.T
        return H

    def _support(self, mat):
        key = id(mat)
        cache = self.__dict__.setdefault("_support_cache", {})
        if key not in cache:
            if sp.issparse(mat):
                cache[key] = np.flatnonzero(mat.getnnz(axis=0))
            else:
                cache[key] = np.flatnonzero(np.any(mat != 0, axis=0))
        return cache[key]

    def toarray(self):
        out = np.zeros((self.m, self.n))
        for (lo, hi), block in zip(zip(self._offsets, self._offsets[1:]), self._blocks):
            if lo == hi:
                continue
            if isinstance(block, tuple):
                left, right = block
                right = right.toarray() if sp.issparse(right) else right
                prod = left @ right
                out[lo:hi] = prod.toarray() if sp.issparse(prod) else prod
            else:
                out[lo:hi] = block.toarray() if sp.issparse(block) else block
        return out


@dataclass(frozen=True)
class ConeProgram:
    """Second-order cone program in stacked standard form.

    ``labels`` optionally names consecutive constraint families as
    ``(name, count)`` pairs over the constraint order (linear rows first,
    then cones).
    """

    c: np.ndarray
    G: object
    h: np.ndarray
    n_lin: int
    soc_dims: tuple
    labels: tuple = field(default=())

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float).ravel()
        h = np.asarray(self.h, dtype=float).ravel()
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "h", h)
        dims = tuple(int(k) for k in self.soc_dims)
        object.__setattr__(self, "soc_dims", dims)
        G = self.G
        if not isinstance(G, BlockRows):
            G = BlockRows([G], c.size) if np.ndim(G) == 2 or sp.issparse(G) else G
            object.__setattr__(self, "G", G)
        if any(k < 1 for k in dims):
            raise ValueError("cone dimensions must be >= 1")
        m = self.n_lin + sum(dims)
        if G.shape != (m, c.size):
            raise ValueError(f"G has shape {G.shape}, expected {(m, c.size)}")
        if h.size != m:
            raise ValueError(f"h has length {h.size}, expected {m}")

    # -- construction -----------------------------------------------------
    @classmethod
    def from_constraints(cls, c, lin=(), soc=(), labels=()):
        """Build from ``lin = [(a, b), ...]`` and ``soc = [(A, b, d, e), ...]``."""
        c = np.asarray(c, dtype=float).ravel()
        n = c.size
        rows, rhs, dims = [], [], []
        for a, b in lin:
            a = np.asarray(a, dtype=float).ravel()
            if a.size != n:
                raise ValueError(f"linear row has length {a.size}, expected {n}")
            rows.append(a[None, :])
            rhs.append([float(b)])
        for A, b, d, e in soc:
            A = np.atleast_2d(np.asarray(A, dtype=float))
            b = np.asarray(b, dtype=float).ravel()
            d = np.asarray(d, dtype=float).ravel()
            if A.shape[1] != n or d.size != n:
                raise ValueError(f"cone block has {A.shape[1]} columns, expected {n}")
            if b.size != A.shape[0]:
                raise ValueError("cone offset length does not match its rows")
            rows.append(np.vstack([-d[None, :], -A]))
            rhs.append(np.concatenate([[float(e)], b]))
            dims.append(A.shape[0] + 1)
        G = np.vstack(rows) if rows else np.zeros((0, n))
        h = np.concatenate(rhs) if rhs else np.zeros(0)
        return cls(c, G, h, len(lin), tuple(dims), tuple(labels))

    # -- views --------------------------------------------------------------
    @property
    def n(self) -> int:
        return self.c.size

    @property
    def m(self) -> int:
        return self.h.size

    @property
    def n_soc(self) -> int:
        return len(self.soc_dims)

    def dense_G(self) -> np.ndarray:
        return self.G.toarray()

    @property
    def lin(self):
        """Linear rows as ``[(a, b), ...]``."""
        G = self.dense_G()
        return [(G[i].copy(), float(self.h[i])) for i in range(self.n_lin)]

    @property
    def soc(self):
        """Cone constraints as ``[(A, b, d, e), ...]``."""
        G = self.dense_G()
        out = []
        start = self.n_lin
        for k in self.soc_dims:
            blk, off = G[start:start + k], self.h[start:start + k]
            out.append((-blk[1:].copy(), off[1:].copy(), -blk[0].copy(), float(off[0])))
            start += k
        return out

    def slack(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float).ravel()
        if x.size != self.n:
            raise ValueError(f"x has length {x.size}, expected {self.n}")
        return self.h - self.G.matvec(x)

    def objective(self, x) -> float:
        return float(self.c @ np.asarray(x, dtype=float).ravel())


def constraint_violations(program: ConeProgram, x) -> np.ndarray:
    """Per-constraint violation, linear rows first then cones, in order.

    Linear rows give ``a^T x - b``; cones give ``||A x + b|| - d^T x - e``.
    Positive entries are violations.
    """
    s = program.slack(x)
    out = np.empty(program.n_lin + program.n_soc)
    out[: program.n_lin] = -s[: program.n_lin]
    start = program.n_lin
    for i, k in enumerate(program.soc_dims):
        blk = s[start:start + k]
        out[program.n_lin + i] = np.linalg.norm(blk[1:]) - blk[0]
        start += k
    return out


def residuals(program: ConeProgram, x) -> tuple[float, float]:
    """``(max linear violation, max cone violation)``, both clipped at 0."""
    v = constraint_violations(program, x)
    lin = v[: program.n_lin]
    cone = v[program.n_lin:]
    return (
        float(max(0.0, lin.max())) if lin.size else 0.0,
        float(max(0.0, cone.max())) if cone.size else 0.0,
    )


# -- plain-text dump -----------------------------------------------------------
#
#   n <n>
#   c <c_1> ... <c_n>
#   lin <a_1> ... <a_n> <b>
#   soc <k> <A row-major, k*n values> <b, k values> <d, n values> <e>
#
# Lines starting with '#' are comments.

def _fmt(values) -> str:
    return " ".join(repr(float(v)) for v in np.ravel(values))


def dump_program(program: ConeProgram, path) -> None:
    with open(path, "w") as fh:
        fh.write("# scheds cone program v1: minimize c^T x\n")
        fh.write(f"n {program.n}\n")
        fh.write(f"c {_fmt(program.c)}\n")
        for a, b in program.lin:
            fh.write(f"lin {_fmt(a)} {b!r}\n")
        for A, b, d, e in program.soc:
            fh.write(f"soc {A.shape[0]} {_fmt(A)} {_fmt(b)} {_fmt(d)} {e!r}\n")


def load_program(path) -> ConeProgram:
    n = None
    c = None
    lin, soc = [], []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            head, *rest = line.split()
            try:
                vals = [float(v) for v in rest]
            except ValueError as exc:
                raise ValueError(f"line {lineno}: non-numeric entry") from exc
            if head == "n":
                n = int(vals[0])
            elif head == "c":
                c = np.array(vals)
            elif head == "lin":
                if n is None or len(vals) != n + 1:
                    raise ValueError(f"line {lineno}: expected {n} coefficients and a bound")
                lin.append((np.array(vals[:n]), vals[n]))
            elif head == "soc":
                k = int(vals[0])
                body = vals[1:]
                if n is None or len(body) != k * n + k + n + 1:
                    raise ValueError(f"line {lineno}: cone record has wrong length")
                A = np.array(body[: k * n]).reshape(k, n)
                b = np.array(body[k * n: k * n + k])
                d = np.array(body[k * n + k: k * n + k + n])
                soc.append((A, b, d, body[-1]))
            else:
                raise ValueError(f"line {lineno}: unknown record {head!r}")
    if n is None or c is None or c.size != n:
        raise ValueError("program file lacks a consistent 'n'/'c' header")
    return ConeProgram.from_constraints(c, lin, soc)
