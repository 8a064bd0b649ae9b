"""Finite orbit exploration and empirical closure classification.

Orbit clouds are enumerated over exponent boxes [-K, K]^g with vectorized
power stacks; boxes too large to materialize are streamed in chunks, keeping
every point that lands in the classification window plus a deterministic
stride sample for hull estimation.  Closure verdicts are explicitly heuristic:
DISCRETE needs a minimum pairwise separation, DENSE_IN_AFFINE(d) needs the
sampled window covered at the configured resolution, everything else is
INCONCLUSIVE.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NoProgress, NotConvergent, PointNotInU
from .groups import COMPLEX, GeneratorSet
from .invariants import InvariantFamily, membership
from .linalg import Matrix, Vector
from .numeric import NumericContext
from .scalars import Scalar, is_rationally_independent

DISCRETE = "DISCRETE"
DENSE_IN_AFFINE = "DENSE_IN_AFFINE"
INCONCLUSIVE = "INCONCLUSIVE"


@dataclass(frozen=True)
class ClosureConfig:
    """Heuristic thresholds; configuration, not ground truth."""

    window: float = 1.0
    gap_threshold: float = 0.01       # max allowed 1-dim gap inside the window
    cover_resolution: float = 0.25    # grid cell size for hull dimension >= 2
    min_dist_factor: float = 100.0    # DISCRETE floor = factor * dedup_eps
    dedup_eps: float = 1e-9
    hull_tol: float = 1e-6
    overflow_limit: float = 1e100
    max_store: int = 4_500_000        # largest tuple box fully materialized
    discrete_count_limit: int = 200_000


@dataclass
class OrbitCloud:
    base_point: np.ndarray            # complex ambient coordinates
    exponent_bound: int
    field: str
    points: np.ndarray                # deduped points (m, n) complex
    total_tuples: int
    subsampled: bool = False
    clipped: bool = False
    window_complete: bool = True      # points within the window are exhaustive

    @property
    def count(self) -> int:
        return self.points.shape[0]


@dataclass
class ClosureVerdict:
    kind: str
    hull_dim: int
    gap: float | None = None
    min_distance: float | None = None
    notes: list[str] = field(default_factory=list)


# ---------------------------------------------------------------------------
# enumeration


def _numeric_generators(G: GeneratorSet) -> list[np.ndarray]:
    out = []
    for g in G.generators:
        out.append(g.to_complex_array() if isinstance(g, Matrix) else np.asarray(g, dtype=complex))
    return out


def _numeric_point(u) -> np.ndarray:
    if isinstance(u, np.ndarray):
        return u.astype(complex)
    return np.array([c.to_complex() if isinstance(c, Scalar) else complex(c) for c in u])


def _power_stack(A: np.ndarray, K: int) -> np.ndarray:
    n = A.shape[0]
    pows = np.empty((2 * K + 1, n, n), dtype=complex)
    pows[K] = np.eye(n)
    for k in range(1, K + 1):
        pows[K + k] = A @ pows[K + k - 1]
    Ainv = np.linalg.inv(A)
    for k in range(1, K + 1):
        pows[K - k] = Ainv @ pows[K - k + 1]
    return pows


def _staged_columns(stacks: list[np.ndarray], u: np.ndarray) -> np.ndarray:
    """Orbit points as columns (n, #tuples * b) for start columns u (n, b).

    Each stage is a handful of wide GEMMs, which keeps BLAS call counts low.
    """
    V = u.reshape(-1, 1) if u.ndim == 1 else u
    for pows in stacks:
        V = np.concatenate([p @ V for p in pows], axis=1)
    return V


def _staged_points(stacks: list[np.ndarray], u: np.ndarray) -> np.ndarray:
    """All points for the full exponent box, as rows (single start vector)."""
    return _staged_columns(stacks, u).T


def _dedup(points: np.ndarray, eps: float) -> np.ndarray:
    if points.shape[0] == 0:
        return points
    flat = points.view(float).reshape(points.shape[0], -1)
    finite = np.all(np.isfinite(flat), axis=1)
    points, flat = points[finite], flat[finite]
    if points.shape[0] == 0:
        return points
    keys = np.round(flat / eps)
    order = np.lexsort(keys.T)
    ks = keys[order]
    keep = np.concatenate([[True], np.any(ks[1:] != ks[:-1], axis=1)])
    return points[order][keep]


def _realify(points: np.ndarray, fieldname: str) -> np.ndarray:
    if fieldname == COMPLEX:
        m, n = points.shape
        out = np.empty((m, 2 * n), dtype=float)
        out[:, 0::2] = points.real
        out[:, 1::2] = points.imag
        return out
    return points.real.astype(float)


def enumerate_orbit(
    G: GeneratorSet,
    u,
    K: int,
    cfg: ClosureConfig | None = None,
) -> OrbitCloud:
    """Orbit sample {g^k u : k in [-K, K]^g}, deduplicated at dedup_eps.

    Boxes beyond cfg.max_store are streamed: the returned points then consist
    of a full small-box cloud, every point whose hull projection lies within
    1.5x the classification window, and a deterministic stride sample; the
    window portion remains exhaustive so covering verdicts stay sound.
    """
    cfg = cfg or ClosureConfig()
    gens = _numeric_generators(G)
    un = _numeric_point(u)
    g = len(gens)
    total = (2 * K + 1) ** g if g else 1
    if g == 0 or K == 0 or total <= cfg.max_store:
        stacks = [_power_stack(A, K) for A in gens]
        pts = _staged_points(stacks, un) if g else un.reshape(1, -1)
        clipped_mask = np.abs(pts).max(axis=1) > cfg.overflow_limit
        clipped = bool(clipped_mask.any())
        pts = pts[~clipped_mask]
        pts = _dedup(pts, cfg.dedup_eps)
        return OrbitCloud(un, K, G.field, pts, total, False, clipped)
    return _enumerate_streamed(G, gens, un, K, cfg, total)


def _enumerate_streamed(G, gens, un, K, cfg: ClosureConfig, total: int) -> OrbitCloud:
    # pass 1: a small full box fixes the affine frame
    K0 = 2
    while (2 * K0 + 1) ** len(gens) * 8 <= cfg.max_store and K0 < K:
        K0 *= 2
    K0 = min(K0, K)
    small = enumerate_orbit(G, tuple(un), K0, cfg)
    base_real = _realify(un.reshape(1, -1), G.field)[0]
    frame = _hull_frame(_realify(small.points, G.field), base_real, cfg)

    window_pts = np.zeros((0, len(un)), dtype=complex)
    clipped = False
    for _attempt in range(2):
        window_pts, sample_real, clipped, grew = _stream_chunks(
            gens, un, K, cfg, frame, G.field, total
        )
        if not grew:
            break
        combined = np.vstack([_realify(small.points, G.field), sample_real])
        frame = _hull_frame(combined, base_real, cfg)

    all_pts = np.vstack([small.points, window_pts])
    pts = _dedup(all_pts, cfg.dedup_eps)
    return OrbitCloud(un, K, G.field, pts, total, True, clipped)


def _complex_projector(V: np.ndarray, fieldname: str) -> np.ndarray:
    """Complex matrix W with realdot(x_real, V) = Re(x @ conj(W))."""
    if fieldname == COMPLEX:
        return V[0::2, :] + 1j * V[1::2, :]
    return V.astype(complex)


def _stream_chunks(gens, un, K, cfg: ClosureConfig, frame, fieldname, total):
    """One streaming pass; returns (window points, stride sample, clipped, hull grew)."""
    base, V = frame
    W = np.conj(_complex_projector(V, fieldname))  # (n, d)
    stacks = [_power_stack(A, K) for A in gens[:-1]]
    last = _power_stack(gens[-1], K)
    inner = (2 * K + 1) ** len(stacks)
    batch = max(1, min(2 * K + 1, 1_500_000 // max(inner, 1)))
    stride = max(1, total // 200_000)
    offset = base @ V  # proj_real(x) = Re(x @ W) - offset
    window_chunks = []
    sample_chunks = []
    clipped = False
    grew = False
    counter = 0
    for lo in range(0, 2 * K + 1, batch):
        hi = min(lo + batch, 2 * K + 1)
        starts = np.stack([last[k] @ un for k in range(lo, hi)], axis=1)  # (n, b)
        T = _staged_columns(stacks, starts)  # (n, m) points as columns
        m = T.shape[1]
        finite = np.abs(T).max(axis=0) <= cfg.overflow_limit  # (m,)
        if not finite.all():
            clipped = True
        # projection onto the hull frame without materializing realified rows
        proj = (W.T @ T).real - offset.reshape(-1, 1)  # (d, m)
        inwin = (np.abs(proj).max(axis=0) <= 1.5 * cfg.window) & finite
        window_chunks.append(T[:, inwin].T)
        take = np.arange(counter % stride, m, stride)
        if take.size:
            take = take[finite[take]]
            sample_real = _realify(T[:, take].T, fieldname)
            sample_chunks.append(sample_real)
            centered = sample_real - base
            resid = centered - (centered @ V) @ V.T
            if resid.size and np.abs(resid).max() > cfg.hull_tol * max(
                1.0, float(np.abs(centered).max())
            ):
                grew = True
        counter += m
    nn = len(un)
    window = (
        np.vstack(window_chunks)
        if any(w.size for w in window_chunks)
        else np.zeros((0, nn), dtype=complex)
    )
    sample = (
        np.vstack(sample_chunks)
        if sample_chunks
        else np.zeros((0, 2 * nn if fieldname == COMPLEX else nn))
    )
    return window, sample, clipped, grew


def _hull_frame(real_pts: np.ndarray, base_real: np.ndarray, cfg: ClosureConfig, prefer_dim=None):
    """Affine frame (base, orthonormal directions) of the sampled hull."""
    centered = real_pts - base_real
    if centered.shape[0] == 0:
        return base_real, np.zeros((real_pts.shape[1], 0))
    _, S, Vt = np.linalg.svd(centered, full_matrices=False)
    scale = S[0] if S.size and S[0] > 0 else 1.0
    d = int(np.sum(S > cfg.hull_tol * scale))
    return base_real, Vt[:d].T


# ---------------------------------------------------------------------------
# classification


def classify_closure(cloud: OrbitCloud, cfg: ClosureConfig | None = None) -> ClosureVerdict:
    """Heuristic closure verdict for a sampled orbit."""
    cfg = cfg or ClosureConfig()
    if cloud.count == 0:
        return ClosureVerdict(INCONCLUSIVE, 0, notes=["empty cloud"])
    real = _realify(cloud.points, cloud.field)
    base = _realify(cloud.base_point.reshape(1, -1), cloud.field)[0]
    base_frame, V = _hull_frame(real, base, cfg)
    d = V.shape[1]
    notes = []
    if cloud.clipped:
        notes.append("overflow-clipped points were dropped")
    if cloud.subsampled:
        notes.append("large box streamed: stored points are window-complete")

    min_dist = None
    if cloud.count == 1:
        return ClosureVerdict(DISCRETE, 0, min_distance=math.inf,
                              notes=notes + ["single point"])
    if cloud.count <= cfg.discrete_count_limit:
        from scipy.spatial import cKDTree

        tree = cKDTree(real)
        dists, _ = tree.query(real, k=2)
        min_dist = float(dists[:, 1].min())
        # a dense orbit sampled at finite K also clears the 100*eps floor, so
        # a discrete verdict additionally demands separation at the scale the
        # density test operates on (the gap threshold)
        floor = max(cfg.min_dist_factor * cfg.dedup_eps, cfg.gap_threshold)
        if min_dist >= floor and _discrete_plausible(cloud, min_dist):
            return ClosureVerdict(DISCRETE, d, min_distance=min_dist, notes=notes)
    else:
        notes.append("point count above discrete-check limit")

    if d == 0:
        return ClosureVerdict(INCONCLUSIVE, 0, min_distance=min_dist,
                              notes=notes + ["no spread beyond dedup resolution"])

    proj = (real - base_frame) @ V
    W = cfg.window
    if d == 1:
        c = np.sort(proj[:, 0])
        inside = c[(c >= -W) & (c <= W)]
        if c.min() > -W or c.max() < W or inside.size < 2:
            return ClosureVerdict(
                INCONCLUSIVE, d, min_distance=min_dist,
                notes=notes + ["sampled range does not cover the window"],
            )
        seq = np.concatenate([[-W], inside, [W]])
        gap = float(np.diff(seq).max())
        if gap <= cfg.gap_threshold:
            return ClosureVerdict(DENSE_IN_AFFINE, 1, gap=gap, min_distance=min_dist, notes=notes)
        return ClosureVerdict(
            INCONCLUSIVE, d, gap=gap, min_distance=min_dist,
            notes=notes + [f"max window gap {gap:.4g} above threshold"],
        )

    res = cfg.cover_resolution
    cells_per_axis = max(1, int(round(2 * W / res)))
    inwin = np.all(np.abs(proj) <= W, axis=1)
    pw = proj[inwin]
    if pw.shape[0] == 0:
        return ClosureVerdict(INCONCLUSIVE, d, min_distance=min_dist,
                              notes=notes + ["no points inside the window"])
    cell_idx = np.clip(((pw + W) / (2 * W) * cells_per_axis).astype(int), 0, cells_per_axis - 1)
    filled = {tuple(row) for row in cell_idx}
    total_cells = cells_per_axis**d
    empty = total_cells - len(filled)
    gap = res * math.sqrt(d)
    if empty == 0:
        return ClosureVerdict(DENSE_IN_AFFINE, d, gap=gap, min_distance=min_dist,
                              notes=notes + [f"window covered at resolution {res}"])
    return ClosureVerdict(
        INCONCLUSIVE, d, gap=None, min_distance=min_dist,
        notes=notes + [f"{empty}/{total_cells} window cells empty at resolution {res}"],
    )


def _discrete_plausible(cloud: OrbitCloud, min_dist: float) -> bool:
    # a streamed cloud omits points, so a large min distance could be an
    # artifact of subsampling; only trust DISCRETE on fully stored boxes
    return not cloud.subsampled


def classify_stabilized(
    G: GeneratorSet,
    u,
    cfg: ClosureConfig | None = None,
    max_exponent: int = 256,
    start: int = 8,
) -> tuple[ClosureVerdict, int]:
    """Grow the exponent box K = start, 2start, ... until the verdict repeats twice."""
    cfg = cfg or ClosureConfig()
    prev = None
    streak = 0
    K = start
    verdict = None
    while K <= max_exponent:
        cloud = enumerate_orbit(G, u, K, cfg)
        verdict = classify_closure(cloud, cfg)
        # INCONCLUSIVE never stabilizes: evidence may still accumulate
        if verdict.kind != INCONCLUSIVE and prev is not None and _same_signature(prev, verdict):
            streak += 1
            if streak >= 2:
                return verdict, K
        else:
            streak = 0
        prev = verdict
        K *= 2
    return verdict, K // 2


def _same_signature(a: ClosureVerdict, b: ClosureVerdict) -> bool:
    """Verdict stability across growing boxes.

    A discrete verdict only counts as stable when the minimum separation
    stays put: a dense orbit sampled too coarsely also looks discrete, but
    its separation keeps shrinking as the box grows.
    """
    if a.kind != b.kind or a.hull_dim != b.hull_dim:
        return False
    if a.kind == DISCRETE:
        da, db = a.min_distance, b.min_distance
        if da is None or db is None:
            return da == db
        if math.isinf(da) or math.isinf(db):
            return math.isinf(da) and math.isinf(db)
        return abs(da - db) <= 0.01 * max(da, db)
    return True


# ---------------------------------------------------------------------------
# exact orbit points (small boxes, for algebraic property checks)


def exact_orbit_points(G: GeneratorSet, u: Vector, K: int) -> dict[tuple[int, ...], Vector]:
    """Exact orbit points indexed by exponent tuple; exact backend only."""
    if not G.exact:
        raise ValueError("exact orbit enumeration needs exact generators")
    import itertools

    out = {}
    powers = []
    for g in G.generators:
        pows = {0: Matrix.identity(G.dimension)}
        for k in range(1, K + 1):
            pows[k] = g * pows[k - 1]
        ginv = g.inverse()
        for k in range(1, K + 1):
            pows[-k] = ginv * pows[-k + 1]
        powers.append(pows)
    for tup in itertools.product(range(-K, K + 1), repeat=len(G.generators)):
        vec = tuple(u)
        for pows, k in zip(powers, tup):
            vec = pows[k].matvec(vec)
        out[tup] = vec
    return out


# ---------------------------------------------------------------------------
# inverse recurrence (the dynamical symmetry check on U)


@dataclass
class InverseRecurrenceReport:
    forward_errors: list[float]   # ||B_m u - v||
    backward_errors: list[float]  # ||B_m^-1 v - u||
    tail_max: float               # max backward error over the last quarter
    final_error: float
    tends_to_zero: bool           # tail decreasing and final error below tol


def inverse_recurrence_check(
    G: GeneratorSet,
    family: InvariantFamily,
    u,
    v,
    words: list[tuple[int, ...]],
    ctx: NumericContext | None = None,
    tol: float = 1e-3,
) -> InverseRecurrenceReport:
    """If B_m u -> v with u, v in U, the inverses must bring v back to u.

    Refuses points outside U (the symmetry is vacuous there) and requires the
    forward errors to be decreasing along the tail.
    """
    ctx = ctx or NumericContext()
    mu = membership(family, u, ctx)
    mv = membership(family, v, ctx)
    if not mu.in_U:
        raise PointNotInU(f"u lies in H_{mu.containing}")
    if not mv.in_U:
        raise PointNotInU(f"v lies in H_{mv.containing}")
    un = _numeric_point(u)
    vn = _numeric_point(v)
    fwd = []
    bwd = []
    for word in words:
        if isinstance(word, Matrix):
            W, Winv = word, word.inverse()
        else:
            W = G.word(word)
            Winv = G.word(tuple(-k for k in word))
        if isinstance(W, Matrix):
            img = np.array([c.to_complex() for c in W.matvec(tuple(u))])
            back = np.array([c.to_complex() for c in Winv.matvec(tuple(v))])
        else:
            img = W @ un
            back = Winv @ vn
        fwd.append(float(np.linalg.norm(img - vn)))
        bwd.append(float(np.linalg.norm(back - un)))
    tail = max(2, len(words) // 2)
    for a, b in zip(fwd[-tail:], fwd[-tail + 1 :]):
        if b > a * 1.001 + 1e-12:
            raise NotConvergent("forward errors are not decreasing along the tail")
    quarter = max(1, len(words) // 4)
    tail_max = max(bwd[-quarter:])
    final = bwd[-1]
    decreasing = all(
        b <= a * 1.2 + 1e-12 for a, b in zip(bwd[-tail:], bwd[-tail + 1 :])
    )
    return InverseRecurrenceReport(
        fwd, bwd, tail_max, final, decreasing and final <= tol
    )


# ---------------------------------------------------------------------------
# integer approximation of a target by the value span


@dataclass
class ApproximationSequence:
    tuples: list[tuple[int, ...]]
    residuals: list[float]
    achieved: float
    stalled: bool
    relation: list[int] | None


def approximate_target(
    values: list[Scalar],
    target: Scalar,
    bound: int = 10**4,
    min_residual: float | None = None,
) -> ApproximationSequence:
    """Integer tuples k with |sum k_i values_i - target| strictly decreasing.

    Searches nested boxes (doubling up to `bound`), solving the largest-value
    coordinate by rounding, which is exhaustive-equivalent over each box.
    Raises NoProgress only when `min_residual` was demanded but the search
    stalled; the integer-relation certificate rides along when one exists.
    """
    if not values:
        raise ValueError("need at least one value")
    for s in values:
        if not s.is_real():
            raise ValueError("approximation values must be real")
    if not target.is_real():
        raise ValueError("target must be real")
    vals = np.array([float(s.evaluate(64).real) for s in values])
    tgt = float(target.evaluate(64).real)
    if np.all(vals == 0.0):
        raise ValueError("all values are zero")

    independent, relation = is_rationally_independent(values)
    pivot = int(np.argmax(np.abs(vals)))
    others = [i for i in range(len(vals)) if i != pivot]

    tuples: list[tuple[int, ...]] = []
    residuals: list[float] = []
    best = math.inf
    B = 1
    stalls = 0
    while B <= bound:
        if len(vals) > 1 and (2 * B + 1) ** (len(vals) - 1) > 8_000_000:
            break  # desk-scale guard for many-value inputs
        found_improvement = False
        for tup, res in _best_in_box(vals, tgt, pivot, others, B):
            if res < best * (1 - 1e-12):
                best = res
                tuples.append(tup)
                residuals.append(res)
                found_improvement = True
        if min_residual is not None and best <= min_residual:
            break
        stalls = 0 if found_improvement else stalls + 1
        B *= 2
    if min_residual is not None and best > min_residual:
        raise NoProgress(best, relation)
    return ApproximationSequence(tuples, residuals, best, stalls >= 2, relation)


def _best_in_box(vals, tgt, pivot, others, B):
    """Improving (tuple, residual) candidates for one exponent box, best first."""
    g = len(vals)
    if not others:
        k = int(np.clip(round(tgt / vals[pivot]), -B, B))
        cands = []
        for kk in {max(-B, min(B, k + d)) for d in (-1, 0, 1)}:
            cands.append(((kk,), abs(kk * vals[pivot] - tgt)))
        cands.sort(key=lambda t: t[1])
        return cands
    grids = np.meshgrid(*[np.arange(-B, B + 1)] * len(others), indexing="ij")
    rest = sum(grids[i] * vals[o] for i, o in enumerate(others))
    kp = np.round((tgt - rest) / vals[pivot])
    out = []
    for dp in (-1.0, 0.0, 1.0):
        kpc = np.clip(kp + dp, -B, B)
        res = np.abs(rest + kpc * vals[pivot] - tgt)
        flat = int(np.argmin(res))
        idx = np.unravel_index(flat, res.shape)
        tup = [0] * g
        for i, o in enumerate(others):
            tup[o] = int(grids[i][idx])
        tup[pivot] = int(kpc[idx])
        out.append((tuple(tup), float(res[idx])))
    out.sort(key=lambda t: t[1])
    return out


# ---------------------------------------------------------------------------
# density propagation


@dataclass
class PropagationReport:
    skipped: bool
    reason: str
    checked: int = 0
    failures: list[int] = field(default_factory=list)


def density_propagation_check(
    G: GeneratorSet,
    family: InvariantFamily,
    cloud: OrbitCloud,
    verdict: ClosureVerdict,
    cfg: ClosureConfig | None = None,
    ctx: NumericContext | None = None,
    samples: int = 20,
    seed: int = 0,
) -> PropagationReport:
    """If one orbit is dense in the whole space, all orbits through U must be.

    Samples further base points of U and requires each of their clouds to
    reach the same full-dimensional covering; any failure is reported as a
    counterexample candidate (i.e. a numerics bug, not new mathematics).
    """
    cfg = cfg or ClosureConfig()
    ctx = ctx or NumericContext()
    n = G.dimension
    full_dim = 2 * n if G.field == COMPLEX else n
    if verdict.kind != DENSE_IN_AFFINE or verdict.hull_dim != full_dim:
        return PropagationReport(True, "orbit is not empirically dense in the full space")
    rng = np.random.default_rng(seed)
    base = cloud.base_point
    failures = []
    checked = 0
    while checked < samples:
        offset = rng.uniform(-cfg.window, cfg.window, size=n)
        if G.field == COMPLEX:
            offset = offset + 1j * rng.uniform(-cfg.window, cfg.window, size=n)
        candidate = base + offset
        if not membership(family, candidate, ctx).in_U:
            continue
        sub_verdict, _ = classify_stabilized(G, candidate, cfg, max_exponent=cloud.exponent_bound)
        checked += 1
        if sub_verdict is None or sub_verdict.kind != DENSE_IN_AFFINE or sub_verdict.hull_dim != full_dim:
            failures.append(checked - 1)
    return PropagationReport(False, "", checked, failures)
