"""Eigenstructure of commuting families.

The central routine refines K^n into the finest decomposition on which every
generator acts with a single eigenvalue, working exactly whenever eigenvalues
can be recognised in the radical scalar field and falling back to validated
numerics otherwise.  Single-eigenvalue verdicts use the spectral-radius proxy
``||N^d||^(1/d)`` of the traceless part rather than raw eigenvalue clustering,
which stays reliable for defective matrices where eig output scatters like
``ulp^(1/d)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import mpmath
import numpy as np

from .errors import (
    ClusterAmbiguity,
    InvarianceViolation,
    NoCommonEigenvector,
    UnmatchedConjugate,
)
from .groups import REAL, GeneratorSet
from .linalg import Matrix, Subspace, kernel, row_reduce_basis, solve
from .numeric import (
    NumericContext,
    NumSubspace,
    as_complex,
    imag_part,
    max_abs,
    neig,
    nidentity,
    nkernel,
    npower,
    nrank,
    nconj,
    nsolve_cols,
    nsvd,
    real_part,
    to_numeric,
)
from .scalars import NumericScalar, Scalar


class _Ambiguous(Exception):
    """Internal: retry at doubled precision."""


# ---------------------------------------------------------------------------
# blocks


@dataclass
class SpectralBlock:
    """Joint generalized eigenspace: one eigenvalue per generator on it."""

    subspace: Subspace | NumSubspace
    eigen_numeric: dict[int, NumericScalar]
    eigen_exact: dict[int, Scalar | None]
    noise: float = 0.0
    conj_partner: int | None = None

    @property
    def dim(self) -> int:
        return self.subspace.dim

    @property
    def exact(self) -> bool:
        return isinstance(self.subspace, Subspace)

    def basis(self):
        return self.subspace.basis


@dataclass
class TriangularForm:
    """Common basis in which every generator is lower triangular."""

    basis: Matrix | np.ndarray          # ambient columns, triangular order
    coeff_change: Matrix | np.ndarray   # d x d change from the block basis
    triangular: list                    # per-generator restricted matrices
    diagonal: list                      # per-generator repeated value mu


@dataclass
class RealBlockGroup:
    """A real-invariant unit: a single real block or a conjugate pair."""

    kind: str                  # "real" | "pair"
    members: tuple[int, ...]
    leader: int
    real_basis: Matrix | np.ndarray


@dataclass
class _Block:
    basis: Matrix | np.ndarray   # ambient x d columns
    noise: float = 0.0

    @property
    def exact(self) -> bool:
        return isinstance(self.basis, Matrix)

    @property
    def dim(self) -> int:
        return self.basis.cols if self.exact else self.basis.shape[1]


# ---------------------------------------------------------------------------
# restriction helpers


def _restrict_exact(g: Matrix, basis: Matrix) -> Matrix:
    target = g * basis
    sol = solve(basis, target)
    if sol is None or not (basis * sol - target).is_zero():
        raise InvarianceViolation("exact block basis is not invariant")
    return sol


def _restrict_numeric(g, basis, ctx: NumericContext):
    target = g @ basis
    sol, resid = nsolve_cols(basis, target, ctx)
    scale = max(1.0, max_abs(g)) * max(1.0, max_abs(basis))
    return sol, resid / scale


def _block_restriction(g, blk: _Block, ctx: NumericContext):
    if blk.exact and isinstance(g, Matrix):
        return _restrict_exact(g, blk.basis)
    gn = to_numeric(g, ctx) if isinstance(g, Matrix) else g
    bn = to_numeric(blk.basis, ctx) if blk.exact else blk.basis
    sol, rel_resid = _restrict_numeric(gn, bn, ctx)
    if rel_resid > 1e3 * max(ctx.eps, blk.noise):
        raise InvarianceViolation(
            f"numeric block basis is not invariant (residual {rel_resid:.3g})"
        )
    return sol


# ---------------------------------------------------------------------------
# single-eigenvalue verdicts


def _exact_trace_mean(R: Matrix) -> Scalar:
    d = R.rows
    tr = Scalar.zero()
    for i in range(d):
        tr = tr + R[i, i]
    return tr / Scalar.from_int(d)


def _numeric_trace_mean(R: np.ndarray):
    d = R.shape[0]
    tr = R[0, 0]
    for i in range(1, d):
        tr = tr + R[i, i]
    return tr / d


def _nilpotency_value(N: np.ndarray, ctx: NumericContext) -> tuple[float, float]:
    """Returns (||N^d||^(1/d), ||N||)."""
    d = N.shape[0]
    norm = max_abs(N)
    if norm == 0.0:
        return 0.0, 0.0
    val = max_abs(npower(N, d, ctx))
    return val ** (1.0 / d), norm


def _bands(d: int, norm: float, noise: float, prec: int) -> tuple[float, float]:
    err = max(16 * 2.0 ** (1 - prec), noise)
    low = (d * err) ** (1.0 / d) * max(1.0, norm)
    return low, 20.0 * low


def _single_eigenvalue(R, blk: _Block, ctx: NumericContext):
    """Return the single eigenvalue of R, or None when R has several.

    Exact restrictions are decided exactly; numeric ones use the banded
    spectral-radius test and raise _Ambiguous inside the gray zone.
    """
    if isinstance(R, Matrix):
        mu = _exact_trace_mean(R)
        N = R - Matrix.identity(R.rows).scale(mu)
        return mu if N.power(R.rows).is_zero() else None
    d = R.shape[0]
    mu = _numeric_trace_mean(R)
    if d == 1:
        return mu
    N = R - mu * nidentity(d, ctx)
    value, norm = _nilpotency_value(N, ctx)
    low, high = _bands(d, norm, blk.noise, ctx.precision)
    if value <= low:
        return mu
    if value >= high:
        return None
    raise _Ambiguous(f"nilpotency value {value:.3g} inside band ({low:.3g}, {high:.3g})")


# ---------------------------------------------------------------------------
# eigenvalue clustering and exact recognition


def _cluster(values: list[complex], delta: float) -> list[tuple[complex, int, list[int]]]:
    """Union-find clustering at radius delta; returns (mean, size, members)."""
    m = len(values)
    parent = list(range(m))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(m):
        for j in range(i + 1, m):
            if abs(values[i] - values[j]) <= delta:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[max(ri, rj)] = min(ri, rj)
    groups: dict[int, list[int]] = {}
    for i in range(m):
        groups.setdefault(find(i), []).append(i)
    out = []
    for members in groups.values():
        center = sum(values[i] for i in members) / len(members)
        out.append((center, len(members), members))
    out.sort(key=lambda c: (round(c[0].real, 12), round(c[0].imag, 12)))
    return out


def recognize_in_field(z, radicands, prec: int = 53) -> Scalar | None:
    """Try to express a numeric value exactly over [1, sqrt(d)...] and i."""
    z = as_complex(z) if not isinstance(z, complex) else z
    rads = sorted(set(radicands))
    parts = []
    for x in (z.real, z.imag):
        if abs(x) <= 1e-12:
            parts.append(Scalar.zero())
            continue
        basis = [Scalar.one()] + [Scalar.sqrt_int(d) for d in rads]
        vals = [mpmath.mpf(x)] + [v.evaluate(64).real for v in basis]
        try:
            # desk-scale height cap: genuine eigenvalue coordinates of small
            # matrices have tiny height, while junk relations matching an
            # arbitrary double need far larger coefficients
            rel = mpmath.pslq(vals, tol=mpmath.mpf(1e-11), maxcoeff=10**3, maxsteps=10**4)
        except Exception:
            rel = None
        if not rel or rel[0] == 0:
            return None
        from fractions import Fraction

        cand = Scalar.zero()
        for coeff, b in zip(rel[1:], basis):
            cand = cand + b * Scalar.from_fraction(Fraction(-coeff, rel[0]))
        # genuine matches agree to near machine precision; pslq artifacts
        # only reach the pslq tolerance (~1e-11) and are rejected here
        if abs(complex(cand.evaluate(64)) - x) > 2e-13 * max(1.0, abs(x)):
            return None
        parts.append(cand)
    return parts[0] + Scalar.i() * parts[1]


def eigenvalues(
    A: Matrix | np.ndarray,
    ctx: NumericContext | None = None,
    radicands: set[int] | None = None,
):
    """Clustered eigenvalues with multiplicities, cross-checked by kernel dims.

    Returns a list of (NumericScalar, multiplicity, exact_or_None) sorted by
    (re, im).  Raises ClusterAmbiguity when no tried precision separates the
    clusters cleanly.
    """
    ctx = ctx or NumericContext()
    radicands = radicands if radicands is not None else set()
    if isinstance(A, Matrix):
        if A.rows != A.cols:
            raise ValueError("eigenvalues of a non-square matrix")
        if A.is_lower_triangular() or A.transpose().is_lower_triangular():
            seen: dict[Scalar, int] = {}
            for i in range(A.rows):
                seen[A[i, i]] = seen.get(A[i, i], 0) + 1
            items = sorted(
                seen.items(),
                key=lambda kv: (
                    round(complex(kv[0].evaluate(64)).real, 12),
                    round(complex(kv[0].evaluate(64)).imag, 12),
                ),
            )
            return [
                (NumericScalar.from_exact(v, ctx.precision), m, v) for v, m in items
            ]
        if radicands == set():
            rads = set()
            for row in A.entries():
                for e in row:
                    rads |= e.radicands()
            radicands = rads

    cur = ctx
    while True:
        try:
            return _eigenvalues_once(A, cur, radicands)
        except _Ambiguous:
            if cur.precision >= cur.max_precision:
                raise ClusterAmbiguity(
                    f"eigenvalue clusters unresolved at precision {cur.precision}"
                )
            cur = cur.doubled()


def _eigenvalues_once(A, ctx: NumericContext, radicands):
    An = to_numeric(A, ctx) if isinstance(A, Matrix) else A
    n = An.shape[0]
    raw = [as_complex(e) for e in neig(An, ctx)]
    scale = max(1.0, max(abs(v) for v in raw))
    err = 16 * 2.0 ** (1 - ctx.precision)
    for j in range(10):
        delta = ctx.cluster_delta * scale * (8.0**j)
        clusters = _cluster(raw, delta)
        centers = [c for c, _, _ in clusters]
        gaps = [
            abs(a - b) for i, a in enumerate(centers) for b in centers[i + 1 :]
        ]
        if gaps and min(gaps) < 10 * delta:
            continue
        ok = True
        for center, mult, _ in clusters:
            N = An - center * nidentity(n, ctx)
            P = npower(N, n, ctx)
            tau = 10 * n * max(err, ctx.eps * 1e-3) * max(1.0, max_abs(N)) ** (n - 1)
            svals, _ = nsvd(P, ctx)
            svals = [float(abs(as_complex(s))) for s in svals] + [0.0] * (
                n - len(svals)
            )
            nullity = sum(1 for s in svals if s <= tau)
            above = [s for s in svals if s > tau]
            if nullity != mult or (above and min(above) < 10 * tau):
                ok = False
                break
        if ok:
            out = []
            for center, mult, _ in clusters:
                exact = None
                if isinstance(A, Matrix):
                    cand = recognize_in_field(center, radicands, ctx.precision)
                    if cand is not None:
                        K = kernel(
                            (A - Matrix.identity(n).scale(cand)).power(n)
                        )
                        if K.dim == mult:
                            exact = cand
                out.append(
                    (NumericScalar.from_complex(center, ctx.precision), mult, exact)
                )
            return out
    raise _Ambiguous("no clustering radius separates the spectrum")


# ---------------------------------------------------------------------------
# simultaneous refinement


def simultaneous_refinement(G: GeneratorSet, ctx: NumericContext | None = None) -> list[SpectralBlock]:
    """Finest decomposition with one eigenvalue per generator per block."""
    ctx = ctx or NumericContext()
    G.check_abelian(ctx)
    cur = ctx
    while True:
        try:
            return _refine(G, cur)
        except _Ambiguous as exc:
            if cur.precision >= cur.max_precision:
                raise ClusterAmbiguity(str(exc))
            cur = cur.doubled()


def _data_precision(G: GeneratorSet, ctx: NumericContext) -> int:
    """Bit precision actually carried by the generator data."""
    prec = ctx.precision
    for g in G.generators:
        if isinstance(g, np.ndarray) and g.dtype != object:
            prec = min(prec, 53)
    return prec


def _refine(G: GeneratorSet, ctx: NumericContext) -> list[SpectralBlock]:
    n = G.dimension
    radicands = G.radicands()
    if G.exact:
        root = _Block(Matrix.identity(n), noise=0.0)
    else:
        # escalating the context cannot repair double-precision input data,
        # so the noise floor follows the data precision, not the context
        root = _Block(nidentity(n, ctx), noise=64 * 2.0 ** (1 - _data_precision(G, ctx)))
    queue = [root]
    final: list[_Block] = []
    while queue:
        blk = queue.pop(0)
        if blk.dim == 0:
            continue
        split_done = False
        for g in G.generators:
            R = _block_restriction(g, blk, ctx)
            mu = _single_eigenvalue(R, blk, ctx)
            if mu is None:
                queue[0:0] = _split_block(R, blk, ctx, radicands)
                split_done = True
                break
        if not split_done:
            final.append(blk)

    total = sum(b.dim for b in final)
    if total != n:
        raise _Ambiguous(f"block dimensions sum to {total}, expected {n}")
    _validate_direct_sum(final, ctx)

    blocks = []
    for blk in final:
        eig_num: dict[int, NumericScalar] = {}
        eig_exact: dict[int, Scalar | None] = {}
        for gi, g in enumerate(G.generators):
            R = _block_restriction(g, blk, ctx)
            if isinstance(R, Matrix):
                mu = _exact_trace_mean(R)
                eig_exact[gi] = mu
                eig_num[gi] = NumericScalar.from_exact(mu, ctx.precision)
            else:
                mu = _numeric_trace_mean(R)
                eig_exact[gi] = None
                eig_num[gi] = NumericScalar.from_complex(as_complex(mu), ctx.precision)
        if blk.exact:
            sub = Subspace(n, blk.basis)
        else:
            sub = NumSubspace(n, blk.basis)
        blocks.append(SpectralBlock(sub, eig_num, eig_exact, noise=blk.noise))

    def sort_key(b: SpectralBlock):
        vals = []
        for gi in range(len(G.generators)):
            z = b.eigen_numeric[gi].as_complex()
            vals.append((round(z.real, 9), round(z.imag, 9)))
        return (tuple(vals), -b.dim)

    blocks.sort(key=sort_key)
    return blocks


def _validate_direct_sum(blocks: list[_Block], ctx: NumericContext) -> None:
    if not blocks:
        return
    if all(b.exact for b in blocks):
        stacked = blocks[0].basis
        for b in blocks[1:]:
            stacked = stacked.hstack(b.basis)
        if stacked.rows == stacked.cols and stacked.det().is_zero():
            raise _Ambiguous("exact block bases do not form a direct sum")
        return
    mats = [to_numeric(b.basis, ctx) if b.exact else b.basis for b in blocks]
    stacked = np.hstack([np.asarray(m, dtype=object if m.dtype == object else complex) for m in mats])
    if nrank(stacked, ctx) != stacked.shape[1]:
        raise _Ambiguous("numeric block bases do not form a direct sum")


def _split_block(R, blk: _Block, ctx: NumericContext, radicands) -> list[_Block]:
    """Split a block along the spectrum of one restriction with >= 2 eigenvalues."""
    if isinstance(R, Matrix):
        subs = _split_exact(R, blk, ctx, radicands)
        if subs is not None:
            return subs
        R = to_numeric(R, ctx)
        blk = _Block(to_numeric(blk.basis, ctx), noise=max(blk.noise, 64 * 2.0 ** (1 - ctx.precision)))
    return _split_numeric(R, blk, ctx)


def _split_exact(R: Matrix, blk: _Block, ctx: NumericContext, radicands) -> list[_Block] | None:
    d = R.rows
    exact_clusters: list[tuple[Scalar, int]] | None = None
    if R.is_lower_triangular() or R.transpose().is_lower_triangular():
        seen: dict[Scalar, int] = {}
        for i in range(d):
            seen[R[i, i]] = seen.get(R[i, i], 0) + 1
        exact_clusters = list(seen.items())
    else:
        raw = [as_complex(e) for e in neig(to_numeric(R, ctx), ctx)]
        scale = max(1.0, max(abs(v) for v in raw))
        for j in range(10):
            delta = ctx.cluster_delta * scale * (8.0**j)
            clusters = _cluster(raw, delta)
            if len(clusters) < 2:
                break
            centers = [c for c, _, _ in clusters]
            gaps = [abs(a - b) for i, a in enumerate(centers) for b in centers[i + 1 :]]
            if gaps and min(gaps) < 10 * delta:
                continue
            cand = []
            for center, mult, _ in clusters:
                exact = recognize_in_field(center, radicands, ctx.precision)
                if exact is None:
                    cand = None
                    break
                cand.append((exact, mult))
            if cand is not None:
                exact_clusters = cand
            break
    if exact_clusters is None or len(exact_clusters) < 2:
        return None
    subs = []
    Idd = Matrix.identity(d)
    for value, mult in exact_clusters:
        K = kernel((R - Idd.scale(value)).power(d))
        if K.dim != mult:
            return None
        subs.append((value, K.basis))
    if sum(b.cols for _, b in subs) != d:
        return None
    subs.sort(
        key=lambda vb: (
            round(complex(vb[0].evaluate(64)).real, 12),
            round(complex(vb[0].evaluate(64)).imag, 12),
        )
    )
    return [_Block(blk.basis * basis, noise=blk.noise) for _, basis in subs]


def _split_numeric(R: np.ndarray, blk: _Block, ctx: NumericContext) -> list[_Block]:
    d = R.shape[0]
    raw = [as_complex(e) for e in neig(R, ctx)]
    scale = max(1.0, max(abs(v) for v in raw))
    basis_n = blk.basis if not blk.exact else to_numeric(blk.basis, ctx)
    for j in range(10):
        delta = ctx.cluster_delta * scale * (8.0**j)
        clusters = _cluster(raw, delta)
        if len(clusters) < 2:
            break
        centers = [c for c, _, _ in clusters]
        gaps = [abs(a - b) for i, a in enumerate(centers) for b in centers[i + 1 :]]
        if gaps and min(gaps) < 10 * delta:
            continue
        subs = []
        ok = True
        for center, mult, _ in clusters:
            N = R - center * nidentity(d, ctx)
            K = nkernel(npower(N, mult, ctx), ctx, expected=mult)
            sol, resid = nsolve_cols(K, R @ K, ctx)
            if resid > 1e3 * max(ctx.eps, blk.noise, delta) * max(1.0, max_abs(R)):
                ok = False
                break
            subs.append(K)
        if not ok:
            continue
        stacked = np.hstack(subs)
        if nrank(stacked, ctx) != d:
            continue
        child_noise = max(blk.noise, 64 * 2.0 ** (1 - ctx.precision))
        return [_Block(basis_n @ K, noise=child_noise) for K in subs]
    raise _Ambiguous("numeric eigenvalue clusters cannot be certified")


# ---------------------------------------------------------------------------
# conjugate pairing over R


def _eigen_is_real(block: SpectralBlock, tol: float) -> bool:
    for gi, ns in block.eigen_numeric.items():
        ex = block.eigen_exact.get(gi)
        if ex is not None:
            if not ex.is_real():
                return False
        elif abs(ns.as_complex().imag) > tol * max(1.0, abs(ns.as_complex())):
            return False
    return True


def _conjugate_maps(a: SpectralBlock, b: SpectralBlock, tol: float) -> bool:
    for gi in a.eigen_numeric:
        za = a.eigen_numeric[gi].as_complex()
        zb = b.eigen_numeric[gi].as_complex()
        if abs(za - zb.conjugate()) > tol * max(1.0, abs(za)):
            return False
    return True


def _conjugate_span(a: SpectralBlock, b: SpectralBlock, ctx: NumericContext) -> bool:
    if a.exact and b.exact:
        conj_cols = a.subspace.basis.conjugate().columns()
        return Subspace.span(a.subspace.ambient, conj_cols) == Subspace.span(
            b.subspace.ambient, b.subspace.basis.columns()
        )
    an = to_numeric(a.subspace.basis, ctx) if a.exact else a.subspace.basis
    bn = to_numeric(b.subspace.basis, ctx) if b.exact else b.subspace.basis
    stacked = np.hstack([nconj(an), bn])
    return nrank(stacked, ctx) == a.dim


def _realify_exact_basis(basis: Matrix) -> Matrix:
    if basis.is_real():
        return basis
    vecs = []
    for j in range(basis.cols):
        col = basis.col(j)
        vecs.append(tuple((c + c.conjugate()) / Scalar.from_int(2) for c in col))
        im = Scalar.i() * Scalar.from_fraction("-1/2")
        vecs.append(tuple((c - c.conjugate()) * im for c in col))
    reduced = row_reduce_basis(vecs)
    if len(reduced) != basis.cols:
        raise UnmatchedConjugate("block with real eigenvalues is not conjugation-stable")
    return Matrix.from_cols(reduced)


def _realify_numeric_basis(basis: np.ndarray, ctx: NumericContext) -> np.ndarray:
    d = basis.shape[1]
    cand = np.hstack([real_part(basis), imag_part(basis)])
    svals, V = nsvd(cand, ctx)
    # range of cand = left singular vectors; recompute directly
    if cand.dtype == object:
        A = np.array([[float(x.real) for x in row] for row in cand])
    else:
        A = cand.real.astype(float)
    U, S, _ = np.linalg.svd(A)
    if d and S[d - 1] <= ctx.eps * max(S[0], 1e-300):
        raise UnmatchedConjugate("block with real eigenvalues has deficient real span")
    return U[:, :d].astype(complex)


def pair_conjugates(
    blocks: list[SpectralBlock], G: GeneratorSet, ctx: NumericContext | None = None
) -> list[RealBlockGroup]:
    """Group blocks of a real family into real singletons and conjugate pairs."""
    ctx = ctx or NumericContext()
    if G.field != REAL:
        raise ValueError("conjugate pairing applies to real generator sets")
    tol = math.sqrt(max(ctx.eps, 1e-15))
    groups: list[RealBlockGroup] = []
    used: set[int] = set()
    for i, blk in enumerate(blocks):
        if i in used:
            continue
        if _eigen_is_real(blk, tol):
            used.add(i)
            rb = (
                _realify_exact_basis(blk.subspace.basis)
                if blk.exact
                else _realify_numeric_basis(blk.subspace.basis, ctx)
            )
            groups.append(RealBlockGroup("real", (i,), i, rb))
            continue
        partner = None
        for j in range(len(blocks)):
            if j == i or j in used:
                continue
            if blocks[j].dim == blk.dim and _conjugate_maps(blk, blocks[j], tol) and _conjugate_span(blk, blocks[j], ctx):
                partner = j
                break
        if partner is None:
            raise UnmatchedConjugate(
                f"block {i} has complex eigenvalues but no conjugate partner"
            )
        used.add(i)
        used.add(partner)
        leader = i if _leader_orientation(blk) else partner
        blocks[i].conj_partner = partner
        blocks[partner].conj_partner = i
        lead_blk = blocks[leader]
        rb = _interleaved_real_basis(lead_blk, ctx)
        groups.append(RealBlockGroup("pair", (i, partner), leader, rb))
    return groups


def _leader_orientation(blk: SpectralBlock) -> bool:
    for gi in sorted(blk.eigen_numeric):
        im = blk.eigen_numeric[gi].as_complex().imag
        if abs(im) > 1e-12:
            return im > 0
    return True


def _interleaved_real_basis(blk: SpectralBlock, ctx: NumericContext):
    """Columns Re(w1), Im(w1), Re(w2), ... from the block basis w."""
    if blk.exact:
        cols = []
        half = Scalar.from_fraction("1/2")
        mhi = Scalar.i() * Scalar.from_fraction("-1/2")
        for j in range(blk.subspace.basis.cols):
            col = blk.subspace.basis.col(j)
            cols.append([(c + c.conjugate()) * half for c in col])
            cols.append([(c - c.conjugate()) * mhi for c in col])
        return Matrix.from_cols(cols)
    B = blk.subspace.basis
    cols = []
    for j in range(B.shape[1]):
        cols.append(real_part(B[:, j : j + 1]))
        cols.append(imag_part(B[:, j : j + 1]))
    return np.hstack(cols)


# ---------------------------------------------------------------------------
# simultaneous triangularization of a single-eigenvalue block


def triangularize(
    G: GeneratorSet,
    block: SpectralBlock,
    ctx: NumericContext | None = None,
) -> TriangularForm:
    """Common basis making every generator lower triangular on the block."""
    ctx = ctx or NumericContext()
    blk = _Block(block.subspace.basis, noise=block.noise)
    restrictions = []
    mus = []
    for gi, g in enumerate(G.generators):
        R = _block_restriction(g, blk, ctx)
        restrictions.append(R)
        ex = block.eigen_exact.get(gi)
        if isinstance(R, Matrix):
            mus.append(ex if ex is not None else _exact_trace_mean(R))
        else:
            mus.append(_numeric_trace_mean(R))
    coeff_change, tri = _triangularize_restrictions(restrictions, mus, ctx, blk.noise)
    if isinstance(coeff_change, Matrix) and blk.exact:
        basis = blk.basis * coeff_change
    else:
        bn = to_numeric(blk.basis, ctx) if blk.exact else blk.basis
        cc = to_numeric(coeff_change, ctx) if isinstance(coeff_change, Matrix) else coeff_change
        basis = bn @ cc
    return TriangularForm(basis, coeff_change, tri, mus)


def _triangularize_restrictions(restrictions, mus, ctx: NumericContext, noise: float):
    exact = all(isinstance(R, Matrix) for R in restrictions)
    if exact:
        return _triangularize_exact(restrictions, mus)
    numeric = [to_numeric(R, ctx) if isinstance(R, Matrix) else R for R in restrictions]
    nmus = [
        m.evaluate(ctx.precision) if isinstance(m, Scalar) else m for m in mus
    ]
    return _triangularize_numeric(numeric, nmus, ctx, noise)


def _triangularize_exact(restrictions: list[Matrix], mus: list[Scalar]):
    d = restrictions[0].rows if restrictions else 0
    nils = [R - Matrix.identity(d).scale(mu) for R, mu in zip(restrictions, mus)]
    layers: list[list] = []
    current: list = []  # basis vectors (columns) of the current flag subspace
    while len(current) < d:
        if current:
            ann = kernel(Matrix.from_cols(current).transpose()).basis.transpose()
        else:
            ann = Matrix.identity(d)
        stacked_rows = []
        for N in nils:
            prod = ann * N
            stacked_rows.extend(prod.entries())
        if stacked_rows:
            V = kernel(Matrix(stacked_rows))
        else:
            V = Subspace.full(d)
        new_vecs = _extend_exact(current, V.basis.columns())
        if not new_vecs:
            raise NoCommonEigenvector(
                "joint kernel of the nilpotent parts did not grow"
            )
        layers.append(new_vecs)
        current = current + new_vecs
    cols: list = []
    for layer in reversed(layers):
        cols.extend(layer)
    # leading-one column normalization: keeps the form triangular and the
    # diagonal unchanged, and stops radical factors inflating restrictions
    normed = []
    for col in cols:
        lead = next((x for x in col if not x.is_zero()), None)
        normed.append([x / lead for x in col] if lead is not None else list(col))
    P = Matrix.from_cols(normed)
    tri = []
    for R in restrictions:
        T = solve(P, R * P)
        if T is None or not _exact_lower_triangular(T):
            raise NoCommonEigenvector("exact triangularization failed")
        tri.append(T)
    return P, tri


def _exact_lower_triangular(T: Matrix) -> bool:
    return all(
        T[i, j].is_zero() for i in range(T.rows) for j in range(i + 1, T.cols)
    )


def _extend_exact(current: list, candidates: list) -> list:
    added = []
    basis = list(current)
    cur_rank = len(basis)
    for cand in candidates:
        trial = basis + [cand]
        from .linalg import rank as exact_rank

        if exact_rank(Matrix.from_cols(trial)) > cur_rank:
            basis.append(cand)
            added.append(cand)
            cur_rank += 1
    return added


def _triangularize_numeric(restrictions, mus, ctx: NumericContext, noise: float):
    d = restrictions[0].shape[0] if restrictions else 0
    nils = [R - mu * nidentity(d, ctx) for R, mu in zip(restrictions, mus)]
    tol = max(ctx.eps, noise)
    layers = []
    current: np.ndarray | None = None
    dim_cur = 0
    while dim_cur < d:
        if current is not None and dim_cur:
            ann = nkernel(current.T, ctx).T
            ann = nconj(ann)
        else:
            ann = nidentity(d, ctx)
        stacked = [ann @ N for N in nils]
        stacked = np.vstack(stacked) if stacked else np.zeros((0, d), dtype=complex)
        V = nkernel(stacked, ctx) if stacked.shape[0] else nidentity(d, ctx)
        new_cols = _extend_numeric(current, V, tol)
        if new_cols is None or new_cols.shape[1] == 0:
            raise NoCommonEigenvector(
                "joint numeric kernel of the nilpotent parts did not grow"
            )
        layers.append(new_cols)
        current = new_cols if current is None else np.hstack([current, new_cols])
        dim_cur = current.shape[1]
    P = np.hstack(list(reversed(layers)))
    tri = []
    for R in restrictions:
        T, resid = nsolve_cols(P, R @ P, ctx)
        scale = max(1.0, max_abs(R))
        if resid > 1e3 * tol * scale:
            raise NoCommonEigenvector("numeric triangular solve residual too large")
        tri.append(T)
    for T in tri:
        if _tri_defect(T) > 1e3 * tol * max(1.0, max_abs(T)):
            raise NoCommonEigenvector("numeric triangularization defect too large")
    return P, tri


def _tri_defect(T: np.ndarray) -> float:
    worst = 0.0
    d = T.shape[0]
    for i in range(d):
        for j in range(i + 1, d):
            worst = max(worst, abs(as_complex(T[i, j])))
    return worst


def _extend_numeric(current: np.ndarray | None, candidates: np.ndarray, tol: float):
    """Greedy column extension keeping numerically independent candidates."""
    cols = []
    if current is not None and current.shape[1]:
        Q, _ = np.linalg.qr(np.asarray(current, dtype=complex))
    else:
        Q = None
    taken = []
    for j in range(candidates.shape[1]):
        c = np.asarray(candidates[:, j], dtype=complex)
        r = c.copy()
        if Q is not None:
            r = r - Q @ (Q.conj().T @ r)
        for t in taken:
            r = r - t * (t.conj() @ r)
        nr = float(np.linalg.norm(r))
        if nr > max(tol, 1e-10) * max(1.0, float(np.linalg.norm(c))):
            taken.append(r / nr)
            cols.append(candidates[:, j : j + 1])
    if not cols:
        return np.zeros((candidates.shape[0], 0), dtype=complex)
    return np.hstack(cols)
