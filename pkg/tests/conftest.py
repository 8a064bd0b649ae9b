"""Shared builders for randomized families used across the suite."""

from __future__ import annotations

import random
from fractions import Fraction

import pytest

from lindyn.groups import GeneratorSet
from lindyn.invariants import nilpotent_span
from lindyn.linalg import Matrix
from lindyn.scalars import Scalar


def random_scalar(rng: random.Random, radicands=(2, 3), max_num=5, allow_imag=True) -> Scalar:
    terms = {}
    for d in (1,) + tuple(radicands):
        for imag in (False, True) if allow_imag else (False,):
            if rng.random() < 0.5:
                num = rng.randint(-max_num, max_num)
                den = rng.randint(1, 4)
                if num:
                    terms[(d, imag)] = Fraction(num, den)
    return Scalar(terms)


def random_integer_matrix(rng: random.Random, n: int, lo=-2, hi=2) -> Matrix:
    return Matrix.from_rows(
        [[rng.randint(lo, hi) for _ in range(n)] for _ in range(n)]
    )


def random_commuting_family(rng: random.Random, n: int, n_gens: int = 2) -> GeneratorSet:
    """Invertible polynomials in one random integer matrix: exact and abelian."""
    while True:
        R = random_integer_matrix(rng, n)
        gens = []
        ok = True
        for _ in range(n_gens):
            for _attempt in range(8):
                coeffs = [rng.randint(-2, 2) for _ in range(3)]
                coeffs[0] += rng.randint(1, 3)  # bias away from singular
                M = Matrix.identity(n).scale(coeffs[0])
                P = R
                for c in coeffs[1:]:
                    if c:
                        M = M + P.scale(c)
                    P = P * R
                if not M.det().is_zero():
                    gens.append(M)
                    break
            else:
                ok = False
                break
        if ok:
            return GeneratorSet("real", n, gens, [f"g{k}" for k in range(n_gens)])


def random_sform_family(
    rng: random.Random, n: int, n_gens: int = 2, want_rank: int | None = None
) -> GeneratorSet:
    """Commuting unitriangular family (polynomials in one shear), exact."""
    for _ in range(200):
        N_rows = [[0] * n for _ in range(n)]
        for i in range(1, n):
            for j in range(i):
                N_rows[i][j] = rng.randint(-2, 2)
            if N_rows[i][i - 1] == 0:
                N_rows[i][i - 1] = rng.choice([-1, 1])
        N = Matrix.from_rows(N_rows)
        gens = []
        for _k in range(n_gens):
            c1 = rng.randint(-2, 2)
            c2 = rng.randint(-2, 2)
            if c1 == 0 and c2 == 0:
                c1 = 1
            M = Matrix.identity(n) + N.scale(c1)
            if c2:
                M = M + (N * N).scale(c2)
            gens.append(M)
        G = GeneratorSet("real", n, gens, [f"g{k}" for k in range(n_gens)])
        if want_rank is None:
            return G
        if nilpotent_span(G).rank == want_rank:
            return G
    raise RuntimeError("could not build an S-form family with the requested rank")


def random_lastrow_group(rng: random.Random, n: int):
    """Two commuting shears acting on the last coordinate, with a radical rate.

    Returns (group, base point, increment values) where the increments are
    rationally independent, so integer words approximate any real target.
    """
    d = rng.choice([2, 3, 5])
    j1 = rng.randrange(0, n - 1)
    j2 = rng.randrange(0, n - 1)
    q1 = Fraction(rng.randint(1, 3), rng.randint(1, 2))
    q2 = Fraction(rng.randint(1, 3), rng.randint(1, 2))
    a = [["1" if i == j else "0" for j in range(n)] for i in range(n)]
    b = [["1" if i == j else "0" for j in range(n)] for i in range(n)]
    a[n - 1][j1] = f"{q1}*sqrt({d})"
    b[n - 1][j1] = f"{q2}"
    if j2 != j1:
        b[n - 1][j2] = "1"
    G = GeneratorSet.from_strings("real", [a, b], ["A", "B"])
    base = [Scalar.one()] * (n - 1) + [Scalar.zero()]
    values = []
    for g in G.generators:
        inc = Scalar.zero()
        for j in range(n - 1):
            inc = inc + g[n - 1, j] * base[j]
        values.append(inc)
    return G, tuple(base), values


@pytest.fixture
def rng():
    return random.Random(20240801)
