"""Exact matrices and subspaces over the radical scalar field.

Rank and determinant use fraction-free (Bareiss) elimination to avoid
coefficient blow-up; kernels and solves finish with exact back-substitution so
basis vectors come out with unit entries at their free coordinates, which
keeps every derived basis deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .errors import NotInvariant
from .scalars import Scalar, parse_scalar

Vector = tuple[Scalar, ...]


def _to_scalar(x) -> Scalar:
    if isinstance(x, Scalar):
        return x
    if isinstance(x, str):
        return parse_scalar(x)
    return Scalar.from_fraction(x)


def as_vector(entries: Iterable) -> Vector:
    return tuple(_to_scalar(x) for x in entries)


class Matrix:
    """Immutable matrix with Scalar entries."""

    __slots__ = ("_rows",)

    def __init__(self, rows: Sequence[Sequence[Scalar]]):
        self._rows = tuple(tuple(row) for row in rows)
        if self._rows:
            w = len(self._rows[0])
            if any(len(r) != w for r in self._rows):
                raise ValueError("ragged rows")

    # -- constructors ---------------------------------------------------

    @staticmethod
    def from_rows(rows: Sequence[Sequence]) -> "Matrix":
        return Matrix([[_to_scalar(x) for x in row] for row in rows])

    @staticmethod
    def from_cols(cols: Sequence[Sequence]) -> "Matrix":
        cols = [list(c) for c in cols]
        return Matrix.from_rows(list(map(list, zip(*cols)))) if cols else Matrix([])

    @staticmethod
    def identity(n: int) -> "Matrix":
        one, zero = Scalar.one(), Scalar.zero()
        return Matrix([[one if i == j else zero for j in range(n)] for i in range(n)])

    @staticmethod
    def zeros(r: int, c: int) -> "Matrix":
        zero = Scalar.zero()
        return Matrix([[zero] * c for _ in range(r)])

    # -- shape and access -------------------------------------------------

    @property
    def rows(self) -> int:
        return len(self._rows)

    @property
    def cols(self) -> int:
        return len(self._rows[0]) if self._rows else 0

    def __getitem__(self, ij) -> Scalar:
        i, j = ij
        return self._rows[i][j]

    def row(self, i: int) -> Vector:
        return self._rows[i]

    def col(self, j: int) -> Vector:
        return tuple(r[j] for r in self._rows)

    def columns(self) -> list[Vector]:
        return [self.col(j) for j in range(self.cols)]

    def entries(self) -> tuple[tuple[Scalar, ...], ...]:
        return self._rows

    # -- arithmetic -------------------------------------------------------

    def __add__(self, other: "Matrix") -> "Matrix":
        return Matrix(
            [[a + b for a, b in zip(ra, rb)] for ra, rb in zip(self._rows, other._rows)]
        )

    def __sub__(self, other: "Matrix") -> "Matrix":
        return Matrix(
            [[a - b for a, b in zip(ra, rb)] for ra, rb in zip(self._rows, other._rows)]
        )

    def __neg__(self) -> "Matrix":
        return Matrix([[-a for a in r] for r in self._rows])

    def scale(self, s) -> "Matrix":
        s = _to_scalar(s)
        return Matrix([[s * a for a in r] for r in self._rows])

    def __mul__(self, other):
        if isinstance(other, Matrix):
            if self.cols != other.rows:
                raise ValueError("shape mismatch")
            ocols = other.columns()
            return Matrix(
                [
                    [_dot(row, col) for col in ocols]
                    for row in self._rows
                ]
            )
        return NotImplemented

    def matvec(self, v: Sequence[Scalar]) -> Vector:
        return tuple(_dot(row, v) for row in self._rows)

    def transpose(self) -> "Matrix":
        return Matrix(list(map(list, zip(*self._rows)))) if self._rows else self

    def conjugate(self) -> "Matrix":
        return Matrix([[a.conjugate() for a in r] for r in self._rows])

    def hstack(self, other: "Matrix") -> "Matrix":
        return Matrix([ra + rb for ra, rb in zip(self._rows, other._rows)])

    def vstack(self, other: "Matrix") -> "Matrix":
        return Matrix(self._rows + other._rows)

    def submatrix(self, row_idx: Sequence[int], col_idx: Sequence[int]) -> "Matrix":
        return Matrix([[self._rows[i][j] for j in col_idx] for i in row_idx])

    def __eq__(self, other):
        return isinstance(other, Matrix) and self._rows == other._rows

    def __hash__(self):
        return hash(self._rows)

    def is_zero(self) -> bool:
        return all(a.is_zero() for r in self._rows for a in r)

    def is_real(self) -> bool:
        return all(a.is_real() for r in self._rows for a in r)

    def is_lower_triangular(self) -> bool:
        return all(
            self._rows[i][j].is_zero()
            for i in range(self.rows)
            for j in range(i + 1, self.cols)
        )

    def constant_diagonal(self) -> Scalar | None:
        """The repeated diagonal value, or None if the diagonal varies."""
        if self.rows != self.cols or self.rows == 0:
            return None
        mu = self._rows[0][0]
        return mu if all(self._rows[i][i] == mu for i in range(self.rows)) else None

    # -- elimination-based operations --------------------------------------

    def det(self) -> Scalar:
        """Determinant by fraction-free elimination."""
        if self.rows != self.cols:
            raise ValueError("determinant of a non-square matrix")
        n = self.rows
        if n == 0:
            return Scalar.one()
        m = [list(r) for r in self._rows]
        sign = 1
        prev = Scalar.one()
        for k in range(n - 1):
            pr = next((i for i in range(k, n) if not m[i][k].is_zero()), None)
            if pr is None:
                return Scalar.zero()
            if pr != k:
                m[k], m[pr] = m[pr], m[k]
                sign = -sign
            for i in range(k + 1, n):
                for j in range(k + 1, n):
                    m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) / prev
                m[i][k] = Scalar.zero()
            prev = m[k][k]
        d = m[n - 1][n - 1]
        return d if sign > 0 else -d

    def power(self, k: int) -> "Matrix":
        """Integer matrix power by repeated squaring; negative k via inverse."""
        if self.rows != self.cols:
            raise ValueError("power of a non-square matrix")
        if k < 0:
            return self.inverse().power(-k)
        result = Matrix.identity(self.rows)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def inverse(self) -> "Matrix":
        sol = solve(self, Matrix.identity(self.rows))
        if sol is None:
            raise ZeroDivisionError("matrix is singular")
        return sol

    # -- numeric views ------------------------------------------------------

    def to_complex_array(self) -> np.ndarray:
        return np.array(
            [[a.to_complex() for a in r] for r in self._rows], dtype=complex
        )

    def max_abs(self) -> float:
        """Largest entry magnitude (double precision estimate)."""
        vals = [abs(a.to_complex()) for r in self._rows for a in r]
        return max(vals, default=0.0)

    def __repr__(self):
        body = "; ".join(", ".join(str(a) for a in r) for r in self._rows)
        return f"Matrix[{body}]"


def _dot(u: Sequence[Scalar], v: Sequence[Scalar]) -> Scalar:
    acc = Scalar.zero()
    for a, b in zip(u, v):
        if not (a.is_zero() or b.is_zero()):
            acc = acc + a * b
    return acc


def matrix_from_strings(rows: Sequence[Sequence[str]]) -> Matrix:
    return Matrix.from_rows(rows)


# -- elimination -----------------------------------------------------------


def _forward_echelon(rows: list[list[Scalar]]) -> tuple[list[list[Scalar]], list[int]]:
    """Fraction-free forward elimination; returns echelon rows and pivot cols."""
    m = [list(r) for r in rows]
    nrows = len(m)
    ncols = len(m[0]) if m else 0
    pivots: list[int] = []
    prev = Scalar.one()
    r = 0
    for c in range(ncols):
        pr = next((i for i in range(r, nrows) if not m[i][c].is_zero()), None)
        if pr is None:
            continue
        if pr != r:
            m[r], m[pr] = m[pr], m[r]
        for i in range(r + 1, nrows):
            for j in range(c + 1, ncols):
                m[i][j] = (m[i][j] * m[r][c] - m[i][c] * m[r][j]) / prev
            m[i][c] = Scalar.zero()
        prev = m[r][c]
        pivots.append(c)
        r += 1
        if r == nrows:
            break
    return m, pivots


def rank(M: Matrix) -> int:
    """Exact rank via fraction-free elimination."""
    if M.rows == 0 or M.cols == 0:
        return 0
    _, pivots = _forward_echelon([list(r) for r in M.entries()])
    return len(pivots)


def kernel(M: Matrix) -> "Subspace":
    """Exact null space; basis vectors carry a unit at their free coordinate."""
    n = M.cols
    if M.rows == 0 or n == 0:
        return Subspace(n, Matrix.identity(n))
    ech, pivots = _forward_echelon([list(r) for r in M.entries()])
    free = [c for c in range(n) if c not in pivots]
    basis_cols: list[list[Scalar]] = []
    for fc in free:
        x = [Scalar.zero()] * n
        x[fc] = Scalar.one()
        for ri in range(len(pivots) - 1, -1, -1):
            pc = pivots[ri]
            acc = Scalar.zero()
            for j in range(pc + 1, n):
                if not (ech[ri][j].is_zero() or x[j].is_zero()):
                    acc = acc + ech[ri][j] * x[j]
            x[pc] = -acc / ech[ri][pc]
        basis_cols.append(x)
    return Subspace(n, Matrix.from_cols(basis_cols) if basis_cols else Matrix.zeros(n, 0))


def solve(A: Matrix, B: Matrix) -> Matrix | None:
    """Exact solution X of A X = B, or None when inconsistent.

    For a singular consistent system the free variables are set to zero.
    """
    n, k = A.rows, A.cols
    aug = [list(ra) + list(rb) for ra, rb in zip(A.entries(), B.entries())]
    ech, pivots = _forward_echelon(aug)
    pivots = [p for p in pivots if p < k]
    # any pivot beyond column k means an inconsistent row
    for i in range(len(pivots), n):
        if any(not ech[i][j].is_zero() for j in range(k, k + B.cols)):
            return None
    cols = []
    for bc in range(B.cols):
        x = [Scalar.zero()] * k
        for ri in range(len(pivots) - 1, -1, -1):
            pc = pivots[ri]
            acc = ech[ri][k + bc]
            for j in range(pc + 1, k):
                if not (ech[ri][j].is_zero() or x[j].is_zero()):
                    acc = acc - ech[ri][j] * x[j]
            x[pc] = acc / ech[ri][pc]
        cols.append(x)
    return Matrix.from_cols(cols)


# -- subspaces and basis changes ---------------------------------------------


@dataclass(frozen=True)
class BasisChange:
    """An invertible matrix with its inverse computed once and verified."""

    matrix: Matrix
    inverse: Matrix

    def __post_init__(self):
        if not (self.matrix * self.inverse) == Matrix.identity(self.matrix.rows):
            raise ValueError("inverse does not verify against the matrix")

    @staticmethod
    def of(P: Matrix) -> "BasisChange":
        return BasisChange(P, P.inverse())

    def apply(self, v: Sequence[Scalar]) -> Vector:
        return self.matrix.matvec(v)

    def coordinates(self, v: Sequence[Scalar]) -> Vector:
        return self.inverse.matvec(v)


@dataclass(frozen=True)
class Subspace:
    """Span of the columns of ``basis`` inside an ambient exact space."""

    ambient: int
    basis: Matrix

    def __post_init__(self):
        if self.basis.cols and self.basis.rows != self.ambient:
            raise ValueError("basis vectors have wrong length")
        if self.basis.cols and rank(self.basis) != self.basis.cols:
            raise ValueError("basis vectors are linearly dependent")

    @property
    def dim(self) -> int:
        return self.basis.cols

    @staticmethod
    def span(ambient: int, vectors: Sequence[Sequence[Scalar]]) -> "Subspace":
        """Canonical subspace spanned by the given (column) vectors."""
        if not vectors:
            return Subspace(ambient, Matrix.zeros(ambient, 0))
        reduced = row_reduce_basis([tuple(v) for v in vectors])
        if not reduced:
            return Subspace(ambient, Matrix.zeros(ambient, 0))
        return Subspace(ambient, Matrix.from_cols(reduced))

    @staticmethod
    def full(ambient: int) -> "Subspace":
        return Subspace(ambient, Matrix.identity(ambient))

    def canonical(self) -> "Subspace":
        return Subspace.span(self.ambient, self.basis.columns())

    def contains(self, v: Sequence[Scalar]) -> bool:
        if self.dim == 0:
            return all(x.is_zero() for x in v)
        aug = self.basis.hstack(Matrix.from_cols([list(v)]))
        return rank(aug) == self.dim

    def __eq__(self, other):
        if not isinstance(other, Subspace) or self.ambient != other.ambient:
            return NotImplemented
        return self.canonical().basis == other.canonical().basis


def row_reduce_basis(vectors: Sequence[Vector]) -> list[Vector]:
    """Reduced-echelon basis of the span (vectors treated as rows)."""
    rows = [list(v) for v in vectors]
    n = len(rows[0]) if rows else 0
    out: list[list[Scalar]] = []
    pivots: list[int] = []
    for row in rows:
        row = list(row)
        for p, prow in zip(pivots, out):
            if not row[p].is_zero():
                f = row[p]
                row = [a - f * b for a, b in zip(row, prow)]
        lead = next((j for j in range(n) if not row[j].is_zero()), None)
        if lead is None:
            continue
        lv = row[lead]
        row = [a / lv for a in row]
        for idx in range(len(out)):
            if not out[idx][lead].is_zero():
                f = out[idx][lead]
                out[idx] = [a - f * b for a, b in zip(out[idx], row)]
        out.append(row)
        pivots.append(lead)
    order = sorted(range(len(out)), key=lambda idx: pivots[idx])
    return [tuple(out[idx]) for idx in order]


def restrict(A: Matrix, space: Subspace, basis: Matrix | None = None) -> Matrix:
    """Matrix of A restricted to an A-invariant subspace, in the given basis.

    Raises NotInvariant when some basis image leaves the span.
    """
    B = basis if basis is not None else space.basis
    if B.cols == 0:
        return Matrix.zeros(0, 0)
    target = A * B
    sol = solve(B, target)
    if sol is None or not (B * sol - target).is_zero():
        # locate the offending column for the error report
        for j in range(B.cols):
            col_sol = solve(B, Matrix.from_cols([list(target.col(j))]))
            if col_sol is None:
                raise NotInvariant(j, "exact solve inconsistent")
            resid = B * col_sol - Matrix.from_cols([list(target.col(j))])
            if not resid.is_zero():
                raise NotInvariant(j, [str(x) for x in resid.col(0)])
        raise NotInvariant(-1, "inconsistent restriction")
    return sol


def sum_intersection(U, V):
    """Bases of U + V and U ∩ V; dims satisfy the modular identity.

    Dispatches on the operands' backend; mixing exact and tolerant subspaces
    is rejected.
    """
    if U.ambient != V.ambient:
        raise ValueError("ambient dimensions differ")
    exact_u, exact_v = isinstance(U, Subspace), isinstance(V, Subspace)
    if exact_u != exact_v:
        raise ValueError("operands must share a backend")
    if not exact_u:
        from .numeric import nsum_intersection

        return nsum_intersection(U, V)
    n = U.ambient
    total = Subspace.span(n, U.basis.columns() + V.basis.columns())
    if U.dim == 0 or V.dim == 0:
        return total, Subspace(n, Matrix.zeros(n, 0))
    stacked = U.basis.hstack(-V.basis)
    ker = kernel(stacked)
    inter_vecs = []
    for j in range(ker.dim):
        coeffs = ker.basis.col(j)[: U.dim]
        vec = [Scalar.zero()] * n
        for idx, c in enumerate(coeffs):
            if c.is_zero():
                continue
            col = U.basis.col(idx)
            vec = [a + c * b for a, b in zip(vec, col)]
        inter_vecs.append(tuple(vec))
    inter = Subspace.span(n, inter_vecs)
    return total, inter
