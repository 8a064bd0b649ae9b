import math
import random

import numpy as np
import pytest

from conftest import random_commuting_family, random_integer_matrix, random_sform_family
from lindyn.errors import NotAbelian
from lindyn.groups import GeneratorSet
from lindyn.linalg import Matrix, matrix_from_strings, rank, solve
from lindyn.numeric import NumericContext, max_abs, to_numeric
from lindyn.scalars import Scalar, parse_scalar
from lindyn.spectral import (
    eigenvalues,
    pair_conjugates,
    recognize_in_field,
    simultaneous_refinement,
    triangularize,
)

CTX = NumericContext()


def shear3_group():
    return GeneratorSet.from_strings(
        "real",
        [
            [["1", "0", "0"], ["0", "1", "0"], ["1", "0", "1"]],
            [["1", "0", "0"], ["0", "1", "0"], ["0", "1", "1"]],
        ],
        ["A", "B"],
    )


def rot_block_group():
    """rot(pi/2) + 2rot(pi/2) and 2rot(pi/2) + 3rot(pi/2) on R^4."""
    A = matrix_from_strings(
        [["0", "-1", "0", "0"], ["1", "0", "0", "0"], ["0", "0", "0", "-2"], ["0", "0", "2", "0"]]
    )
    B = matrix_from_strings(
        [["0", "-2", "0", "0"], ["2", "0", "0", "0"], ["0", "0", "0", "-3"], ["0", "0", "3", "0"]]
    )
    return GeneratorSet("real", 4, [A, B], ["A", "B"])


class TestEigenvalues:
    def test_unipotent(self):
        A = shear3_group().generators[0]
        evs = eigenvalues(A, CTX)
        assert len(evs) == 1
        ns, mult, exact = evs[0]
        assert mult == 3 and exact == Scalar.one()

    def test_diag(self):
        evs = eigenvalues(matrix_from_strings([["2", "0"], ["0", "3"]]), CTX)
        assert [(e[1], str(e[2])) for e in evs] == [(1, "2"), (1, "3")]

    def test_companion_of_quartic(self):
        # companion matrix of (x^2-2)(x^2-3) = x^4 - 5x^2 + 6
        C = matrix_from_strings(
            [["0", "0", "0", "-6"], ["1", "0", "0", "0"], ["0", "1", "0", "5"], ["0", "0", "1", "0"]]
        )
        evs = eigenvalues(C, CTX)
        got = sorted(e[0].as_complex().real for e in evs)
        # oracle: numeric values of the known roots
        expected = sorted([-math.sqrt(3), -math.sqrt(2), math.sqrt(2), math.sqrt(3)])
        assert len(evs) == 4
        assert all(abs(a - b) < 1e-9 for a, b in zip(got, expected))
        assert all(abs(e[0].as_complex().imag) < 1e-9 for e in evs)

    def test_recognition_in_field(self):
        val = recognize_in_field(complex(0.5, math.sqrt(3) / 2), {3})
        assert val == parse_scalar("1/2 + 1/2*sqrt(3)*i")
        assert recognize_in_field(complex(math.pi, 0.0), {2, 3}) is None


class TestRefinement:
    def test_unipotent_single_block(self):
        blocks = simultaneous_refinement(shear3_group(), CTX)
        assert [b.dim for b in blocks] == [3]
        # oracle: both generators are unipotent, sole eigenvalue 1
        assert blocks[0].eigen_exact == {0: Scalar.one(), 1: Scalar.one()}

    def test_diag_splits(self):
        G = GeneratorSet.from_strings(
            "real", [[["2", "0"], ["0", "3"]], [["1", "0"], ["0", "1"]]]
        )
        blocks = simultaneous_refinement(G, CTX)
        assert sorted(b.dim for b in blocks) == [1, 1]

    def test_rot_blocks_split_to_lines(self):
        G = rot_block_group()
        blocks = simultaneous_refinement(G, CTX)
        assert [b.dim for b in blocks] == [1, 1, 1, 1]
        # oracle: explicit diagonalization; the +i eigenvector of rot(pi/2)
        # is (1, -i) supported on the first two coordinates
        by_eig = {}
        for b in blocks:
            key = (str(b.eigen_exact[0]), str(b.eigen_exact[1]))
            by_eig[key] = b
        blk = by_eig[("i", "2*i")]
        col = blk.subspace.basis.col(0)
        expected = [Scalar.one(), -Scalar.i(), Scalar.zero(), Scalar.zero()]
        scale = col[0]
        assert [c / scale for c in col] == expected

    def test_refinement_splits_products_only(self):
        # each generator alone has conjugate-pair spectra, but the complex
        # refinement still reaches four one-dimensional blocks
        G = rot_block_group()
        blocks = simultaneous_refinement(G, CTX)
        stacked = blocks[0].subspace.basis
        for b in blocks[1:]:
            stacked = stacked.hstack(b.subspace.basis)
        assert rank(stacked) == 4

    def test_not_abelian_rejected(self):
        G = GeneratorSet.from_strings(
            "real", [[["1", "1"], ["0", "1"]], [["1", "0"], ["1", "1"]]]
        )
        with pytest.raises(NotAbelian):
            simultaneous_refinement(G, CTX)

    def test_invariance_of_blocks(self, rng):
        for _ in range(10):
            G = random_commuting_family(rng, rng.randint(2, 4))
            blocks = simultaneous_refinement(G, CTX)
            assert sum(b.dim for b in blocks) == G.dimension
            for b in blocks:
                basis = b.subspace.basis
                for g in G.generators:
                    if b.exact:
                        sol = solve(basis, g * basis)
                        assert sol is not None and (basis * sol - g * basis).is_zero()
                    else:
                        gn = to_numeric(g, CTX)
                        from lindyn.numeric import nsolve_cols

                        _, resid = nsolve_cols(basis, gn @ basis, CTX)
                        scale = max(1.0, max_abs(gn)) * max(1.0, max_abs(basis))
                        assert resid <= 1e3 * CTX.eps * scale


class TestPairing:
    def test_rotation_pair(self):
        R = matrix_from_strings([["1/2", "-1/2*sqrt(3)"], ["1/2*sqrt(3)", "1/2"]])
        G = GeneratorSet("real", 2, [R], ["R"])
        blocks = simultaneous_refinement(G, CTX)
        groups = pair_conjugates(blocks, G, CTX)
        assert len(groups) == 1 and groups[0].kind == "pair"
        rb = groups[0].real_basis
        assert rb.cols == 2 and rb.is_real()

    def test_diag_real_singletons(self):
        G = GeneratorSet.from_strings("real", [[["2", "0"], ["0", "3"]]])
        blocks = simultaneous_refinement(G, CTX)
        groups = pair_conjugates(blocks, G, CTX)
        assert [g.kind for g in groups] == ["real", "real"]

    def test_rot_block_pairs(self):
        G = rot_block_group()
        blocks = simultaneous_refinement(G, CTX)
        groups = pair_conjugates(blocks, G, CTX)
        assert [g.kind for g in groups] == ["pair", "pair"]
        for g in groups:
            assert g.real_basis.cols == 2 and g.real_basis.is_real()
        # partners are cross-linked
        for g in groups:
            i, j = g.members
            assert blocks[i].conj_partner == j and blocks[j].conj_partner == i


class TestTriangularize:
    def test_already_triangular(self):
        G = shear3_group()
        blocks = simultaneous_refinement(G, CTX)
        tf = triangularize(G, blocks[0], CTX)
        assert tf.basis == Matrix.identity(3)
        for T, g in zip(tf.triangular, G.generators):
            assert T == g

    def test_single_jordan_block(self):
        G = GeneratorSet.from_strings(
            "real", [[["1", "0", "0"], ["1", "1", "0"], ["0", "1", "1"]]]
        )
        blocks = simultaneous_refinement(G, CTX)
        tf = triangularize(G, blocks[0], CTX)
        assert tf.basis == Matrix.identity(3)

    def test_conjugated_group_recovers_triangularity(self, rng):
        # oracle: check triangularity of the output on a conjugated copy
        base = shear3_group()
        for _ in range(5):
            while True:
                R = random_integer_matrix(rng, 3)
                if not R.det().is_zero():
                    break
            Rinv = R.inverse()
            G = GeneratorSet("real", 3, [R * g * Rinv for g in base.generators], ["A", "B"])
            blocks = simultaneous_refinement(G, CTX)
            assert len(blocks) == 1
            tf = triangularize(G, blocks[0], CTX)
            for T in tf.triangular:
                if isinstance(T, Matrix):
                    assert T.is_lower_triangular()
                else:
                    d = T.shape[0]
                    for i in range(d):
                        for j in range(i + 1, d):
                            assert abs(complex(T[i, j])) < 1e-8

    def test_product_closure_of_triangular_form(self, rng):
        # closure check: random generator words stay lower triangular with
        # multiplicative diagonal in the computed basis
        G = random_sform_family(rng, 4)
        blocks = simultaneous_refinement(G, CTX)
        tf = triangularize(G, blocks[0], CTX)
        P = tf.basis
        for _ in range(20):
            word = [rng.randint(-3, 3) for _ in G.generators]
            W = G.word(word)
            T = solve(P, W * P)
            assert T is not None and T.is_lower_triangular()
            mu = Scalar.one()
            for g_mu, k in zip(tf.diagonal, word):
                mu = mu * g_mu**k
            assert T.constant_diagonal() == mu

    def test_single_eigenvalue_words(self, rng):
        # products of single-eigenvalue commuting matrices keep a single
        # eigenvalue (checked on random words)
        G = random_sform_family(rng, 4)
        for _ in range(20):
            word = [rng.randint(-3, 3) for _ in G.generators]
            W = G.word(word)
            evs = eigenvalues(W, CTX)
            assert len(evs) == 1 and evs[0][1] == 4


class TestErrorPaths:
    def test_cluster_ambiguity_raised(self):
        # double-precision input whose spectrum is split by ~1e-6, right at
        # the data's own noise band: escalation cannot settle it and the
        # refinement must say so instead of guessing
        from lindyn.errors import ClusterAmbiguity

        a, h = 1.0, 1e-12
        N = np.array([[a, 1.0], [-a * a + h, -a]], dtype=complex)
        G = GeneratorSet("real", 2, [np.eye(2, dtype=complex) + N], ["g"])
        with pytest.raises(ClusterAmbiguity):
            simultaneous_refinement(G, NumericContext(max_precision=128))

    def test_triangular_input_resolves_band_scale_gap_exactly(self):
        # the same separation is decidable when the input is exact
        A = Matrix.from_rows([[0, 1], [0, "1/20000000"]])
        evs = eigenvalues(A, NumericContext())
        assert [(str(e[2]), e[1]) for e in evs] == [("0", 1), ("1/20000000", 1)]

    def test_unmatched_conjugate_raised(self):
        from lindyn.errors import UnmatchedConjugate
        from lindyn.linalg import Subspace
        from lindyn.scalars import NumericScalar, Scalar
        from lindyn.spectral import SpectralBlock

        R = matrix_from_strings([["1/2", "-1/2*sqrt(3)"], ["1/2*sqrt(3)", "1/2"]])
        G = GeneratorSet("real", 2, [R], ["R"])
        blocks = simultaneous_refinement(G, CTX)
        with pytest.raises(UnmatchedConjugate):
            pair_conjugates([blocks[0]], G, CTX)  # partner withheld

    def test_no_common_eigenvector_raised(self):
        from lindyn.errors import NoCommonEigenvector
        from lindyn.spectral import _triangularize_exact

        N1 = Matrix.from_rows([[0, 1], [0, 0]])
        N2 = Matrix.from_rows([[0, 0], [1, 0]])
        gens = [Matrix.identity(2) + N1, Matrix.identity(2) + N2]
        with pytest.raises(NoCommonEigenvector):
            _triangularize_exact(gens, [Scalar.one(), Scalar.one()])


class TestHighPrecisionPath:
    def test_eigenvalues_at_128_bits(self):
        ctx = NumericContext(precision=128)
        C = matrix_from_strings([["0", "-2"], ["1", "0"]])  # x^2 + 2
        evs = eigenvalues(C, ctx)
        vals = sorted(e[0].as_complex().imag for e in evs)
        assert abs(vals[0] + math.sqrt(2)) < 1e-12
        assert abs(vals[1] - math.sqrt(2)) < 1e-12

    def test_refinement_at_128_bits(self):
        ctx = NumericContext(precision=128)
        G = GeneratorSet.from_strings("real", [[["2", "0"], ["0", "3"]]])
        blocks = simultaneous_refinement(G, ctx)
        assert sorted(b.dim for b in blocks) == [1, 1]
