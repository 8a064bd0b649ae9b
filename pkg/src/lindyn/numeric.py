"""Tolerant numeric backend: complex128 by default, mpmath above 53 bits.

High-precision matrices are numpy object arrays with ``mpmath.mpc`` entries so
that slicing, stacking and ``@`` behave identically on both paths; only the
decompositions (eig, svd) convert to ``mpmath.matrix`` at the call site.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import mpmath
import numpy as np

from .linalg import Matrix


@dataclass(frozen=True)
class NumericContext:
    """Precision and tolerance knobs for every tolerant computation."""

    precision: int = 53
    eps: float = 1e-9
    cluster_delta: float = 1e-8
    max_precision: int = 512

    @property
    def high(self) -> bool:
        return self.precision > 53

    def doubled(self) -> "NumericContext":
        return replace(self, precision=min(2 * self.precision, self.max_precision))


def as_complex(x) -> complex:
    if isinstance(x, mpmath.mpc):
        return complex(float(x.real), float(x.imag))
    if isinstance(x, mpmath.mpf):
        return complex(float(x), 0.0)
    return complex(x)


def to_numeric(M, ctx: NumericContext) -> np.ndarray:
    """Numeric view of an exact Matrix (or passthrough for arrays)."""
    if isinstance(M, np.ndarray):
        return M
    if isinstance(M, Matrix):
        if ctx.high:
            ent = [[e.evaluate(ctx.precision) for e in row] for row in M.entries()]
            return np.array(ent, dtype=object)
        return M.to_complex_array()
    raise TypeError(f"cannot convert {type(M)} to numeric")


def vec_to_numeric(v: Sequence, ctx: NumericContext) -> np.ndarray:
    from .scalars import Scalar

    if isinstance(v, np.ndarray):
        return v
    out = []
    for x in v:
        if isinstance(x, Scalar):
            out.append(x.evaluate(ctx.precision) if ctx.high else x.to_complex())
        else:
            out.append(mpmath.mpc(x) if ctx.high else complex(x))
    return np.array(out, dtype=object if ctx.high else complex)


def nidentity(n: int, ctx: NumericContext) -> np.ndarray:
    if ctx.high:
        return np.array(
            [[mpmath.mpc(1 if i == j else 0) for j in range(n)] for i in range(n)],
            dtype=object,
        )
    return np.eye(n, dtype=complex)


def max_abs(A: np.ndarray) -> float:
    if A.size == 0:
        return 0.0
    if A.dtype == object:
        return float(max(abs(as_complex(x)) for x in A.ravel()))
    return float(np.max(np.abs(A)))


def _to_mp(A: np.ndarray) -> mpmath.matrix:
    M = mpmath.matrix(A.shape[0], A.shape[1])
    for i in range(A.shape[0]):
        for j in range(A.shape[1]):
            M[i, j] = A[i, j] if isinstance(A[i, j], (mpmath.mpc, mpmath.mpf)) else mpmath.mpc(A[i, j])
    return M


def _from_mp(M: mpmath.matrix) -> np.ndarray:
    return np.array([[M[i, j] for j in range(M.cols)] for i in range(M.rows)], dtype=object)


def neig(A: np.ndarray, ctx: NumericContext) -> list:
    """Eigenvalues only, at the context precision."""
    if A.shape[0] == 0:
        return []
    if A.shape[0] == 1:
        # mpmath.eig returns the full (E, EL, ER) tuple for 1x1 input
        return [A[0, 0] if A.dtype == object else complex(A[0, 0])]
    if ctx.high:
        with mpmath.workprec(ctx.precision):
            E = mpmath.eig(_to_mp(A), left=False, right=False)
        return list(E)
    return list(np.linalg.eigvals(A.astype(complex)))


def nrank(A: np.ndarray, ctx: NumericContext, scale: float | None = None) -> int:
    """Pivot count from full-pivot elimination, threshold eps * entry scale."""
    if A.size == 0:
        return 0
    work = np.array(A, dtype=object if A.dtype == object else complex)
    nr, nc = work.shape
    if scale is None:
        scale = max_abs(work)
    if scale == 0.0:
        return 0
    thresh = ctx.eps * scale
    rows = list(range(nr))
    cols = list(range(nc))
    rank_count = 0
    for _ in range(min(nr, nc)):
        best, bi, bj = 0.0, -1, -1
        for i in rows:
            for j in cols:
                m = abs(as_complex(work[i, j]))
                if m > best:
                    best, bi, bj = m, i, j
        if best <= thresh:
            break
        piv = work[bi, bj]
        for i in rows:
            if i == bi:
                continue
            f = work[i, bj] / piv
            for j in cols:
                work[i, j] = work[i, j] - f * work[bi, j]
        rows.remove(bi)
        cols.remove(bj)
        rank_count += 1
    return rank_count


def nsvd(A: np.ndarray, ctx: NumericContext):
    """Singular values and right singular vectors (columns of V)."""
    if ctx.high:
        with mpmath.workprec(ctx.precision):
            U, S, V = mpmath.svd_c(_to_mp(A))
            # mpmath convention: A = U * diag(S) * V, so right vectors are
            # the conjugated rows of V
            sv = [S[i] for i in range(len(S))]
            Vc = np.array(
                [[mpmath.conj(V[i, j]) for i in range(V.rows)] for j in range(V.cols)],
                dtype=object,
            ).T
        return sv, Vc.T  # columns indexed by singular value order
    U, S, Vh = np.linalg.svd(A.astype(complex))
    return list(S), Vh.conj().T


def nkernel(
    A: np.ndarray,
    ctx: NumericContext,
    expected: int | None = None,
    scale: float | None = None,
) -> np.ndarray:
    """Orthonormal basis (columns) of the tolerant null space."""
    nr, nc = A.shape
    if nc == 0:
        return np.zeros((0, 0), dtype=complex)
    if nr == 0 or max_abs(A) == 0.0:
        return nidentity(nc, ctx)
    S, V = nsvd(A, ctx)
    if scale is None:
        scale = float(abs(as_complex(S[0]))) if len(S) else 0.0
    thresh = ctx.eps * max(scale, 1e-300)
    svals = [float(abs(as_complex(s))) for s in S]
    svals += [0.0] * (nc - len(svals))
    if expected is None:
        nullity = sum(1 for s in svals if s <= thresh)
    else:
        nullity = expected
    if nullity == 0:
        return V[:, :0]
    return V[:, nc - nullity :]


def nsolve_cols(B: np.ndarray, Y: np.ndarray, ctx: NumericContext):
    """Least-squares solution X of B X = Y plus the max-entry residual."""
    if ctx.high:
        with mpmath.workprec(ctx.precision):
            Bm = _to_mp(B)
            cols = []
            for j in range(Y.shape[1]):
                y = mpmath.matrix([[Y[i, j]] for i in range(Y.shape[0])])
                x = mpmath.qr_solve(Bm, y)[0]
                cols.append([x[i] for i in range(len(x))])
            X = np.array(cols, dtype=object).T
    else:
        X = np.linalg.lstsq(B.astype(complex), Y.astype(complex), rcond=None)[0]
    residual = max_abs(B @ X - Y)
    return X, residual


def ninverse(A: np.ndarray, ctx: NumericContext) -> np.ndarray:
    if ctx.high:
        with mpmath.workprec(ctx.precision):
            return _from_mp(_to_mp(A) ** -1)
    return np.linalg.inv(A.astype(complex))


def npower(A: np.ndarray, k: int, ctx: NumericContext) -> np.ndarray:
    n = A.shape[0]
    if k < 0:
        return npower(ninverse(A, ctx), -k, ctx)
    result = nidentity(n, ctx)
    base = A
    while k:
        if k & 1:
            result = result @ base
        base = base @ base
        k >>= 1
    return result


def nconj(A: np.ndarray) -> np.ndarray:
    if A.dtype == object:
        return np.array(
            [[mpmath.conj(x) for x in row] for row in A], dtype=object
        )
    return np.conj(A)


def real_part(A: np.ndarray) -> np.ndarray:
    if A.dtype == object:
        return np.array([[x.real for x in row] for row in A], dtype=object)
    return A.real.astype(complex)


def imag_part(A: np.ndarray) -> np.ndarray:
    if A.dtype == object:
        return np.array([[x.imag for x in row] for row in A], dtype=object)
    return A.imag.astype(complex)


@dataclass(frozen=True)
class NumSubspace:
    """Span of the columns of a numeric basis matrix."""

    ambient: int
    basis: np.ndarray

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    def contains(self, v: np.ndarray, ctx: NumericContext) -> bool:
        if self.dim == 0:
            return max_abs(v.reshape(-1, 1)) <= ctx.eps
        _, res = nsolve_cols(self.basis, v.reshape(-1, 1), ctx)
        scale = max(max_abs(self.basis), max_abs(v.reshape(-1, 1)), 1.0)
        return res <= ctx.eps * scale


def nrange(A: np.ndarray, ctx: NumericContext, expected: int | None = None) -> np.ndarray:
    """Orthonormal basis (columns) of the tolerant column space."""
    An = A.astype(complex) if A.dtype != object else np.array(
        [[as_complex(x) for x in row] for row in A], dtype=complex
    )
    if An.size == 0:
        return np.zeros((An.shape[0], 0), dtype=complex)
    U, S, _ = np.linalg.svd(An, full_matrices=False)
    if expected is None:
        thresh = ctx.eps * max(float(S[0]) if S.size else 0.0, 1e-300)
        expected = int(np.sum(S > thresh))
    return U[:, :expected]


def nsum_intersection(Uspace: "NumSubspace", Vspace: "NumSubspace", ctx: NumericContext | None = None):
    """Tolerant bases of U + V and U ∩ V with the modular dimension identity."""
    ctx = ctx or NumericContext()
    n = Uspace.ambient
    Bu, Bv = Uspace.basis, Vspace.basis
    if Uspace.dim == 0 or Vspace.dim == 0:
        total = nrange(np.hstack([Bu, Bv]), ctx) if (Uspace.dim or Vspace.dim) else np.zeros((n, 0), complex)
        return NumSubspace(n, total), NumSubspace(n, np.zeros((n, 0), dtype=complex))
    stacked = np.hstack([Bu, -Bv])
    total_dim = nrank(stacked if stacked.dtype != object else stacked, ctx)
    total = nrange(np.hstack([Bu, Bv]), ctx, expected=total_dim)
    ker = nkernel(stacked, ctx, expected=Uspace.dim + Vspace.dim - total_dim)
    if ker.shape[1] == 0:
        inter = np.zeros((n, 0), dtype=complex)
    else:
        vecs = Bu.astype(complex) @ ker[: Uspace.dim].astype(complex)
        inter = nrange(vecs, ctx, expected=ker.shape[1])
    return NumSubspace(n, total), NumSubspace(n, inter)
