"""Invariant-subspace structure of an abelian matrix group.

Computes the family H_1..H_r of invariant subspaces of codimension 1 or 2
whose complement U is a dense open set, the nilpotent-direction span and
invariant hull that drive the bounded-restriction recursion, and the
recursive invariant tree certifying that chains of invariant subspaces have
length at most n.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    FirstCoordinateZero,
    InvarianceViolation,
    NotConvergent,
)
from .groups import COMPLEX, REAL, GeneratorSet
from .linalg import (
    BasisChange,
    Matrix,
    Subspace,
    Vector,
    rank as exact_rank,
    restrict,
    solve,
)
from .numeric import (
    NumericContext,
    NumSubspace,
    max_abs,
    ninverse,
    nsolve_cols,
    to_numeric,
    vec_to_numeric,
)
from .scalars import Scalar
from .spectral import (
    RealBlockGroup,
    SpectralBlock,
    TriangularForm,
    pair_conjugates,
    simultaneous_refinement,
    triangularize,
)

CASE_COMPLEX_HYPERPLANE = "complex-hyperplane"
CASE_REAL_HYPERPLANE = "real-hyperplane"
CASE_CONJUGATE_PAIR = "real-conjugate-pair"


# ---------------------------------------------------------------------------
# S-form helpers and the nilpotent-direction family


def s_form_diagonal(g: Matrix) -> Scalar:
    """The repeated diagonal value of a lower-triangular generator."""
    if not g.is_lower_triangular():
        raise ValueError("generator is not lower triangular")
    mu = g.constant_diagonal()
    if mu is None:
        raise ValueError("generator diagonal is not constant")
    return mu


@dataclass
class NilpotentSpan:
    """Spanning family {(B - mu_B I) e_i} of the nilpotent directions."""

    vectors: list[tuple[int, int, Vector]]  # (generator idx, column idx, vector)
    chosen: list[int]                       # indices of a maximal independent subset
    rank: int
    span: Subspace

    def chosen_vectors(self) -> list[Vector]:
        return [self.vectors[i][2] for i in self.chosen]


def nilpotent_span(G: GeneratorSet) -> NilpotentSpan:
    """Span of (B - mu_B I) e_i over generators B and columns i < n.

    Generators must be exact and in S-form (lower triangular, constant
    diagonal).  Vector order is generator-major then column, which fixes the
    chosen independent subset deterministically.
    """
    if not G.exact:
        raise ValueError("nilpotent span requires exact generators")
    n = G.dimension
    vectors: list[tuple[int, int, Vector]] = []
    for gi, g in enumerate(G.generators):
        mu = s_form_diagonal(g)
        N = g - Matrix.identity(n).scale(mu)
        for i in range(n - 1):
            vec = N.col(i)
            if not vec[0].is_zero():
                raise InvarianceViolation("nilpotent direction has nonzero first coordinate")
            vectors.append((gi, i, vec))
    chosen: list[int] = []
    basis: list[Vector] = []
    r = 0
    for idx, (_, _, vec) in enumerate(vectors):
        if all(x.is_zero() for x in vec):
            continue
        trial = basis + [vec]
        if exact_rank(Matrix.from_cols([list(v) for v in trial])) > r:
            basis.append(vec)
            chosen.append(idx)
            r += 1
    span = Subspace.span(n, [list(v) for v in basis]) if basis else Subspace(n, Matrix.zeros(n, 0))
    return NilpotentSpan(vectors, chosen, r, span)


def nilpotent_span_closure_defect(G: GeneratorSet, fam: NilpotentSpan, words) -> int:
    """How many word-generated directions escape the generator span.

    The family is built from generators alone; group elements are words in
    them, and this counts (W - mu_W I) e_i outside span(F) over the given
    exponent words.  Zero means the generator-built span suffices.
    """
    n = G.dimension
    bad = 0
    for word in words:
        W = G.word(word)
        mu = s_form_diagonal(W)
        N = W - Matrix.identity(n).scale(mu)
        for i in range(n - 1):
            vec = N.col(i)
            if all(x.is_zero() for x in vec):
                continue
            if not fam.span.contains(vec):
                bad += 1
    return bad


def invariant_hull(G: GeneratorSet, u, fam: NilpotentSpan | None = None) -> Subspace:
    """Smallest computed invariant subspace containing u: span{u, v_1..v_r}."""
    fam = fam or nilpotent_span(G)
    n = G.dimension
    u = tuple(u)
    vecs = [list(u)] + [list(v) for v in fam.chosen_vectors()]
    hull = Subspace.span(n, vecs)
    for name, g in zip(G.names, G.generators):
        for j in range(hull.dim):
            img = g.matvec(hull.basis.col(j))
            if not hull.contains(img):
                raise InvarianceViolation(
                    f"hull of u is not invariant under {name}"
                )
    return hull


# ---------------------------------------------------------------------------
# the invariant family


@dataclass
class InvariantSubspace:
    subspace: Subspace | NumSubspace
    case: str
    block_index: int
    functionals: Matrix | np.ndarray     # rows; H = joint kernel of these
    invariance_residual: float

    @property
    def dim(self) -> int:
        return self.subspace.dim

    @property
    def exact(self) -> bool:
        return isinstance(self.subspace, Subspace)


@dataclass
class InvariantFamily:
    field: str
    dimension: int
    subspaces: list[InvariantSubspace]
    block_change: Matrix | np.ndarray        # Q: stacked block bases
    triangular_change: Matrix | np.ndarray   # P: triangularized composite basis
    change: BasisChange | None = None        # P with verified inverse (exact path)
    blocks: list[SpectralBlock] = field(default_factory=list)
    groups: list[RealBlockGroup] = field(default_factory=list)
    forms: list[TriangularForm] = field(default_factory=list)

    @property
    def count(self) -> int:
        return len(self.subspaces)


def invariant_family(G: GeneratorSet, ctx: NumericContext | None = None) -> InvariantFamily:
    """The invariant subspaces H_1..H_r (codim 1 or 2) with complement U."""
    ctx = ctx or NumericContext()
    n = G.dimension
    if n == 1:
        zero_sub = Subspace(1, Matrix.zeros(1, 0))
        functionals = Matrix.identity(1)
        case = CASE_REAL_HYPERPLANE if G.field == REAL else CASE_COMPLEX_HYPERPLANE
        sub = InvariantSubspace(zero_sub, case, 0, functionals, 0.0)
        eye = Matrix.identity(1)
        return InvariantFamily(G.field, 1, [sub], eye, eye, BasisChange.of(eye))

    blocks = simultaneous_refinement(G, ctx)

    units: list[tuple[str, object, object]] = []  # (case, pre-basis, triangular-basis)
    forms: list[TriangularForm] = []
    if G.field == COMPLEX:
        groups: list[RealBlockGroup] = []
        for bi, blk in enumerate(blocks):
            tf = triangularize(G, blk, ctx)
            units.append((CASE_COMPLEX_HYPERPLANE, blk.basis(), tf.basis))
            forms.append(tf)
    else:
        groups = pair_conjugates(blocks, G, ctx)
        for grp in groups:
            if grp.kind == "real":
                blk = blocks[grp.leader]
                pseudo = SpectralBlock(
                    _as_subspace(n, grp.real_basis),
                    blk.eigen_numeric,
                    blk.eigen_exact,
                    noise=blk.noise,
                )
                tf = triangularize(G, pseudo, ctx)
                units.append((CASE_REAL_HYPERPLANE, grp.real_basis, tf.basis))
            else:
                leader = blocks[grp.leader]
                tf = triangularize(G, leader, ctx)
                real_tri = _interleave(tf.basis, ctx)
                units.append((CASE_CONJUGATE_PAIR, grp.real_basis, real_tri))
            forms.append(tf)

    exact_all = all(isinstance(tb, Matrix) for _, _, tb in units)
    change = None
    if exact_all:
        Q = _hstack_exact([pb for _, pb, _ in units])
        P = _hstack_exact([tb for _, _, tb in units])
        change = BasisChange.of(P)
        P_inv = change.inverse
    else:
        Q = np.hstack([_as_numeric(pb, ctx) for _, pb, _ in units])
        P = np.hstack([_as_numeric(tb, ctx) for _, _, tb in units])
        P_inv = ninverse(P, ctx)

    subspaces: list[InvariantSubspace] = []
    offset = 0
    for ui, (case, _, tb) in enumerate(units):
        width = tb.cols if isinstance(tb, Matrix) else tb.shape[1]
        omit = 2 if case == CASE_CONJUGATE_PAIR else 1
        keep = [offset + j for j in range(omit, width)]
        others = [j for j in range(n) if not (offset <= j < offset + width)]
        col_idx = sorted(others + keep)
        if exact_all:
            basis = P.submatrix(range(n), col_idx) if col_idx else Matrix.zeros(n, 0)
            sub = Subspace(n, basis)
            functionals = P_inv.submatrix(range(offset, offset + omit), range(n))
            residual = _exact_invariance_residual(G, sub)
        else:
            basis = P[:, col_idx] if col_idx else np.zeros((n, 0), dtype=complex)
            sub = NumSubspace(n, basis)
            functionals = P_inv[offset : offset + omit, :]
            residual = _numeric_invariance_residual(G, sub, ctx)
        subspaces.append(InvariantSubspace(sub, case, ui, functionals, residual))
        offset += width

    if len(subspaces) > n:
        raise InvarianceViolation(
            f"computed {len(subspaces)} invariant subspaces for n={n}; input defies the n bound"
        )
    for s in subspaces:
        if s.dim not in (n - 1, n - 2):
            raise InvarianceViolation(
                f"invariant subspace has dimension {s.dim}, expected {n-1} or {n-2}"
            )
    return InvariantFamily(G.field, n, subspaces, Q, P, change, blocks, groups, forms)


def _as_subspace(n: int, basis) -> Subspace | NumSubspace:
    if isinstance(basis, Matrix):
        return Subspace(n, basis)
    return NumSubspace(n, basis)


def _as_numeric(M, ctx: NumericContext) -> np.ndarray:
    return to_numeric(M, ctx) if isinstance(M, Matrix) else M


def _hstack_exact(mats: list[Matrix]) -> Matrix:
    out = mats[0]
    for m in mats[1:]:
        out = out.hstack(m)
    return out


def _interleave(basis, ctx: NumericContext):
    """Columns Re(w1), Im(w1), Re(w2), ... of a complex basis."""
    if isinstance(basis, Matrix):
        cols = []
        half = Scalar.from_fraction("1/2")
        mhi = Scalar.i() * Scalar.from_fraction("-1/2")
        for j in range(basis.cols):
            col = basis.col(j)
            cols.append([(c + c.conjugate()) * half for c in col])
            cols.append([(c - c.conjugate()) * mhi for c in col])
        return Matrix.from_cols(cols)
    from .numeric import imag_part, real_part

    cols = []
    for j in range(basis.shape[1]):
        cols.append(real_part(basis[:, j : j + 1]))
        cols.append(imag_part(basis[:, j : j + 1]))
    return np.hstack(cols)


def _exact_invariance_residual(G: GeneratorSet, sub: Subspace) -> float:
    for g in G.generators:
        if sub.dim == 0:
            continue
        restrict(g, sub)  # raises NotInvariant on failure
    return 0.0


def _numeric_invariance_residual(G: GeneratorSet, sub: NumSubspace, ctx: NumericContext) -> float:
    worst = 0.0
    if sub.dim == 0:
        return 0.0
    for g in G.generators:
        gn = _as_numeric(g, ctx)
        target = gn @ sub.basis
        _, resid = nsolve_cols(sub.basis, target, ctx)
        scale = max(1.0, max_abs(gn)) * max(1.0, max_abs(sub.basis))
        worst = max(worst, resid / scale)
    if worst > 1e3 * ctx.eps:
        raise InvarianceViolation(
            f"numeric invariant subspace residual {worst:.3g} exceeds tolerance"
        )
    return worst


# ---------------------------------------------------------------------------
# membership


@dataclass
class Membership:
    in_U: bool
    containing: list[int]


def membership(family: InvariantFamily, x, ctx: NumericContext | None = None) -> Membership:
    """Which H_k contain x; x lies in U exactly when the list is empty."""
    ctx = ctx or NumericContext()
    containing = []
    exact_x = not isinstance(x, np.ndarray) and all(isinstance(c, Scalar) for c in x)
    for k, sub in enumerate(family.subspaces):
        if isinstance(sub.functionals, Matrix) and exact_x:
            vals = sub.functionals.matvec(tuple(x))
            if all(v.is_zero() for v in vals):
                containing.append(k)
        else:
            fn = _as_numeric(sub.functionals, ctx)
            xn = vec_to_numeric(x, ctx)
            vals = fn @ xn.reshape(-1, 1)
            scale = max_abs(fn) * max(1.0, max_abs(xn.reshape(-1, 1)))
            if max_abs(vals) <= ctx.eps * max(scale, 1e-300):
                containing.append(k)
    return Membership(in_U=not containing, containing=containing)


# ---------------------------------------------------------------------------
# the invariant tree


@dataclass
class InvariantTreeNode:
    dimension: int
    case: str | None
    family_size: int
    children: list["InvariantTreeNode"]

    def max_depth(self) -> int:
        if not self.children:
            return 0
        return 1 + max(c.max_depth() for c in self.children)


@dataclass
class InvariantTree:
    root: InvariantTreeNode
    depth: int


def invariant_tree(G: GeneratorSet, ctx: NumericContext | None = None,
                   max_depth: int | None = None) -> InvariantTree:
    """Recursive invariant families down to dimension zero.

    Depth counts edges on the longest chain K^n ⊃ H ⊃ ... ⊃ {0}; the
    recursion drops dimension at every step so depth never exceeds n.
    """
    ctx = ctx or NumericContext()
    limit = max_depth if max_depth is not None else G.dimension
    root = _tree_node(G, ctx, limit, None)
    return InvariantTree(root, root.max_depth())


def _tree_node(G: GeneratorSet, ctx: NumericContext, budget: int, case: str | None) -> InvariantTreeNode:
    n = G.dimension
    if n == 0:
        return InvariantTreeNode(0, case, 0, [])
    if budget <= 0:
        raise InvarianceViolation("invariant tree exceeded its depth budget")
    fam = invariant_family(G, ctx)
    children = []
    for sub in fam.subspaces:
        if sub.dim == 0:
            children.append(InvariantTreeNode(0, sub.case, 0, []))
            continue
        restricted = _restrict_group(G, sub, ctx)
        children.append(_tree_node(restricted, ctx, budget - 1, sub.case))
    return InvariantTreeNode(n, case, fam.count, children)


def _restrict_group(G: GeneratorSet, sub: InvariantSubspace, ctx: NumericContext) -> GeneratorSet:
    gens = []
    if sub.exact and G.exact:
        space = sub.subspace
        for g in G.generators:
            gens.append(restrict(g, space))
    else:
        basis = _as_numeric(sub.subspace.basis, ctx)
        for g in G.generators:
            gn = _as_numeric(g, ctx)
            sol, _ = nsolve_cols(basis, gn @ basis, ctx)
            gens.append(sol)
    return GeneratorSet(G.field, sub.dim, gens, list(G.names))


# ---------------------------------------------------------------------------
# bounded restriction witness (the case-split recursion)


@dataclass
class BoundedRestrictionWitness:
    subspace: Subspace                 # in original coordinates, contains u
    basis: Matrix                      # ambient columns, first column is u
    restricted_generators: list[Matrix]
    restricted_sequence: list[Matrix]
    bound: float                       # sup of max-entry norms over the sequence
    case_trace: list[str]


def bounded_restriction_witness(
    G: GeneratorSet,
    u,
    words: list[tuple[int, ...]],
    ctx: NumericContext | None = None,
    convergence_tol: float = 1e-2,
) -> BoundedRestrictionWitness:
    """Invariant H containing u on which the convergent sequence stays bounded.

    Implements the rank case split: full rank keeps the whole space, rank
    zero is the homothety case, and intermediate rank recurses on the
    invariant hull of u with a triangular basis of the nilpotent span.
    """
    ctx = ctx or NumericContext()
    if not G.exact:
        raise ValueError("witness recursion requires exact generators")
    u = tuple(u)
    if u[0].is_zero():
        raise FirstCoordinateZero("u must have nonzero first coordinate")

    elements = [w if isinstance(w, Matrix) else G.word(w) for w in words]
    images = []
    for W in elements:
        img = W.matvec(u)
        images.append(np.array([c.to_complex() for c in img]))
    if len(images) >= 2:
        tail = images[len(images) // 2 :]
        worst = max(
            float(np.max(np.abs(a - tail[-1]))) for a in tail
        )
        scale = max(1.0, float(np.max(np.abs(tail[-1]))))
        if worst > convergence_tol * scale:
            raise NotConvergent(
                f"images of u along the sequence drift by {worst:.3g}"
            )

    trace: list[str] = []
    embed, gens = _witness_recurse(G, u, trace)
    seq = []
    bound = 0.0
    for word, element in zip(words, elements):
        if isinstance(word, Matrix):
            acc = solve(embed, element * embed)
            if acc is None or not (embed * acc - element * embed).is_zero():
                raise InvarianceViolation("sequence element does not preserve the witness subspace")
        else:
            acc = Matrix.identity(gens[0].rows) if gens else Matrix.identity(0)
            for g, k in zip(gens, word):
                if k:
                    acc = acc * g.power(k)
        seq.append(acc)
        bound = max(bound, acc.max_abs())
    sub = Subspace(G.dimension, embed)
    return BoundedRestrictionWitness(sub, embed, gens, seq, bound, trace)


def _witness_recurse(G: GeneratorSet, u: Vector, trace: list[str]) -> tuple[Matrix, list[Matrix]]:
    """Returns (ambient basis with first column u, restricted generators)."""
    n = G.dimension
    fam = nilpotent_span(G)
    r = fam.rank
    if r == n - 1 or r == 0:
        trace.append("full-rank" if r == n - 1 else "homothety")
        cols = [list(u)] + [
            [Scalar.one() if i == j else Scalar.zero() for i in range(n)]
            for j in range(1, n)
        ]
        P = Matrix.from_cols(cols)
        gens = [solve(P, g * P) for g in G.generators]
        if any(g is None for g in gens):
            raise InvarianceViolation("basis change failed in witness recursion")
        return P, gens

    trace.append(f"recurse-hull(rank={r})")
    f_basis = Matrix.from_cols([list(v) for v in fam.chosen_vectors()])
    f_restrictions = []
    for g in G.generators:
        sol = solve(f_basis, g * f_basis)
        if sol is None or not (f_basis * sol - g * f_basis).is_zero():
            raise InvarianceViolation("nilpotent span is not invariant")
        f_restrictions.append(sol)
    mus = [s_form_diagonal(g) for g in G.generators]
    from .spectral import _triangularize_exact

    coeff_change, _ = _triangularize_exact(f_restrictions, mus)
    w_cols = []
    for w in (f_basis * coeff_change).columns():
        lead = next((x for x in w if not x.is_zero()))
        w_cols.append([x / lead for x in w])
    hull_basis = Matrix.from_cols([list(u)] + w_cols)
    restricted = []
    for g in G.generators:
        sol = solve(hull_basis, g * hull_basis)
        if sol is None or not (hull_basis * sol - g * hull_basis).is_zero():
            raise InvarianceViolation("invariant hull restriction failed")
        if not sol.is_lower_triangular():
            raise InvarianceViolation("restricted generator is not lower triangular")
        restricted.append(sol)
    sub_group = GeneratorSet(G.field, r + 1, restricted, list(G.names))
    sub_u = tuple([Scalar.one()] + [Scalar.zero()] * r)
    sub_embed, gens = _witness_recurse(sub_group, sub_u, trace)
    return hull_basis * sub_embed, gens
