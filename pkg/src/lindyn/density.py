"""Exact density decisions for integer spans Z v_1 + ... + Z v_k in R^d.

Everything reduces to rational linear algebra over the radical-basis
coefficient vectors: integer relations among the generators decide the free
rank, and integer vectors s with <t, v_i> = s_i for some real t (characters of
the closure) decide density.  A finitely generated subgroup is closed exactly
when its free rank equals the dimension of its real span; it is dense exactly
when it spans R^d and admits no nonzero character.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import UnsupportedDimension
from .linalg import Matrix, kernel, rank as exact_rank
from .scalars import Scalar, integerize, rational_nullspace

CLOSED = "CLOSED"
DENSE = "DENSE"
DENSE_IN_PROPER_SUBGROUP = "DENSE_IN_PROPER_SUBGROUP"


@dataclass(frozen=True)
class IntegerSpan:
    """Generators v_1..v_k of a subgroup of R^d, entries real radical scalars."""

    vectors: tuple[tuple[Scalar, ...], ...]
    dim: int

    def __post_init__(self):
        for v in self.vectors:
            if len(v) != self.dim:
                raise ValueError("vector length does not match ambient dimension")
            for c in v:
                if not c.is_real():
                    raise ValueError(f"integer-span entries must be real, got {c}")

    @staticmethod
    def of(vectors, dim: int | None = None) -> "IntegerSpan":
        vecs = tuple(tuple(v) for v in vectors)
        d = dim if dim is not None else (len(vecs[0]) if vecs else 1)
        return IntegerSpan(vecs, d)

    @property
    def count(self) -> int:
        return len(self.vectors)

    def matrix(self) -> Matrix:
        """d x k matrix with the generators as columns."""
        return Matrix.from_cols([list(v) for v in self.vectors])


def _coefficient_rows(vectors) -> list[list[Fraction]]:
    """Rational expansion rows indexed by (coordinate, radical key)."""
    keys = sorted({k for v in vectors for c in v for k in c.terms})
    if not keys:
        keys = [(1, False)]
    rows = []
    d = len(vectors[0]) if vectors else 0
    for coord in range(d):
        for key in keys:
            rows.append([v[coord].terms.get(key, Fraction(0)) for v in vectors])
    return rows


def relation_basis(span: IntegerSpan) -> list[list[int]]:
    """Basis of the integer relations {s : sum s_i v_i = 0}."""
    if span.count == 0:
        return []
    rows = _coefficient_rows(span.vectors)
    return [integerize(v) for v in rational_nullspace(rows)]


def integer_relation(span: IntegerSpan) -> list[int] | None:
    """One nonzero integer relation among the generators, or None."""
    basis = relation_basis(span)
    return basis[0] if basis else None


def character_basis(span: IntegerSpan) -> list[list[int]]:
    """Integer vectors s lying in the real row space of the generator matrix.

    Each such s comes from a real functional t with <t, v_i> = s_i for all i,
    i.e. a character of the closure; a nonzero one obstructs density.
    """
    k = span.count
    if k == 0:
        return []
    M = span.matrix()
    ker = kernel(M)  # right kernel: x with sum x_j v_j = 0 coordinatewise
    if ker.dim == 0:
        # row space is all of R^k: every integer vector qualifies
        return [[1 if i == j else 0 for i in range(k)] for j in range(k)]
    # s must satisfy sum_j x_j s_j = 0 for every kernel vector x; expanding
    # each x_j over the radical basis turns this into rational rows acting on s
    keys = sorted(
        {key for j in range(ker.dim) for c in ker.basis.col(j) for key in c.terms}
    ) or [(1, False)]
    rows = []
    for j in range(ker.dim):
        x = ker.basis.col(j)
        for key in keys:
            rows.append([x[i].terms.get(key, Fraction(0)) for i in range(k)])
    return [integerize(v) for v in rational_nullspace(rows)]


@dataclass
class DensityVerdict:
    kind: str
    free_rank: int
    span_dim: int
    relations: list[list[int]] = field(default_factory=list)
    character: list[int] | None = None
    notes: list[str] = field(default_factory=list)


def dense_in(span: IntegerSpan) -> DensityVerdict:
    """Classify the closure of Z v_1 + ... + Z v_k in R^d exactly.

    CLOSED when the group is a discrete lattice, DENSE when the closure is
    all of R^d, DENSE_IN_PROPER_SUBGROUP otherwise; the certificate carries
    the relation basis and/or the obstructing character.
    """
    if span.dim > 3:
        raise UnsupportedDimension(f"density decisions support d <= 3, got {span.dim}")
    rels = relation_basis(span)
    free_rank = span.count - len(rels)
    span_dim = exact_rank(span.matrix()) if span.count else 0
    if free_rank == span_dim:
        return DensityVerdict(
            CLOSED,
            free_rank,
            span_dim,
            rels,
            notes=[f"free rank {free_rank} equals span dimension: discrete lattice"],
        )
    chars = character_basis(span)
    nonzero_char = next((c for c in chars if any(c)), None)
    if nonzero_char is None:
        if span_dim == span.dim:
            return DensityVerdict(
                DENSE,
                free_rank,
                span_dim,
                rels,
                notes=["no nonzero integer character and the generators span R^d"],
            )
        return DensityVerdict(
            DENSE_IN_PROPER_SUBGROUP,
            free_rank,
            span_dim,
            rels,
            notes=[f"dense in its {span_dim}-dimensional span, a proper subspace"],
        )
    return DensityVerdict(
        DENSE_IN_PROPER_SUBGROUP,
        free_rank,
        span_dim,
        rels,
        character=nonzero_char,
        notes=["nonzero integer character obstructs density"],
    )


# ---------------------------------------------------------------------------
# determinant-criterion brute force (the d = 2, k = 3 oracle)


def determinant_cofactors(span: IntegerSpan) -> list[Scalar]:
    """Cofactors c with det([x-row; y-row; s]) = sum s_i c_i, for d=2, k=3."""
    if span.dim != 2 or span.count != 3:
        raise ValueError("determinant criterion needs three vectors in R^2")
    (x1, y1), (x2, y2), (x3, y3) = span.vectors
    return [
        x2 * y3 - x3 * y2,
        x3 * y1 - x1 * y3,
        x1 * y2 - x2 * y1,
    ]


def determinant_zero_search(span: IntegerSpan, bound: int = 50) -> list[tuple[int, int, int]]:
    """All integer s with |s_i| <= bound and det = 0 exactly, 0 excluded.

    Numeric prefilter over the full box, candidates verified exactly.
    """
    cof = determinant_cofactors(span)
    c = np.array([x.to_complex().real for x in cof])
    rng = np.arange(-bound, bound + 1)
    S1, S2, S3 = np.meshgrid(rng, rng, rng, indexing="ij")
    vals = S1 * c[0] + S2 * c[1] + S3 * c[2]
    tol = 1e-7 * max(1.0, float(np.max(np.abs(c)))) * bound
    idx = np.argwhere(np.abs(vals) <= tol)
    out = []
    for i, j, k in idx:
        s = (int(rng[i]), int(rng[j]), int(rng[k]))
        if s == (0, 0, 0):
            continue
        total = Scalar.zero()
        for si, ci in zip(s, cof):
            total = total + ci * Scalar.from_int(si)
        if total.is_zero():
            out.append(s)
    return out
