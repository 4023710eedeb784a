import math

import numpy as np
import pytest
from gmpy2 import mpq

from mdcf.core_numerics import IntMatrix, rat
from mdcf.errors import DomainError, RankError
from mdcf.ergodic_stats import best_approximations
from mdcf.lattice_lll import (LambdaT, LllParams, brute_force_shortest,
                              gram_schmidt, is_lll_reduced, iterated_approx,
                              lattice_basis, lll_reduce, simultaneous_approx)


def random_unimodular_like_basis(rng, n, span=30):
    while True:
        cols = [[int(v) for v in rng.integers(-span, span + 1, n)]
                for _ in range(n)]
        m = IntMatrix(tuple(tuple(cols[j][i] for j in range(n))
                            for i in range(n)))
        if m.det() != 0:
            return cols


class TestGramSchmidt:
    def test_orthogonal_basis(self):
        g = gram_schmidt(lattice_basis([(2, 0), (0, 3)]))
        assert g.mu[1][0] == 0
        assert g.bstar_sq == (mpq(4), mpq(9))

    def test_identity(self):
        g = gram_schmidt(lattice_basis([(1, 0), (0, 1)]))
        assert g.bstar_sq == (mpq(1), mpq(1))

    def test_hand_example(self):
        g = gram_schmidt(lattice_basis([(1, 1), (0, 1)]))
        assert g.mu[1][0] == mpq(1, 2)
        assert g.bstar_sq[1] == mpq(1, 2)
        assert g.gram_consistent()

    def test_rank_error(self):
        with pytest.raises(RankError):
            gram_schmidt(lattice_basis([(1, 2), (2, 4)]))


class TestPredicate:
    def test_identity_reduced(self):
        assert is_lll_reduced(lattice_basis([(1, 0), (0, 1)]))

    def test_improper_basis(self):
        assert not is_lll_reduced(lattice_basis([(1, 0), (1, 1)]))

    def test_reduce_postcondition(self):
        rng = np.random.default_rng(23)
        for _ in range(20):
            cols = random_unimodular_like_basis(rng, 3)
            red, u = lll_reduce(lattice_basis(cols))
            assert is_lll_reduced(red)
            assert u.is_unimodular()

    def test_already_reduced_unchanged(self):
        basis = lattice_basis([(1, 0), (0, 1)])
        red, u = lll_reduce(basis)
        assert red.columns == basis.columns
        assert u == IntMatrix.identity(2)


class TestReduce:
    def test_transform_exact(self):
        rng = np.random.default_rng(29)
        for _ in range(25):
            n = int(rng.integers(2, 6))
            cols = random_unimodular_like_basis(rng, n)
            basis = lattice_basis(cols)
            red, u = lll_reduce(basis)
            for j in range(n):
                new_col = tuple(sum(basis.columns[i][t] * u[i, j]
                                    for i in range(n)) for t in range(n))
                assert new_col == red.columns[j]

    def test_shortest_vector_factor(self):
        rng = np.random.default_rng(31)
        for _ in range(20):
            n = int(rng.integers(2, 5))
            cols = random_unimodular_like_basis(rng, n)
            red, _ = lll_reduce(lattice_basis(cols))
            short = brute_force_shortest(red)
            s2 = sum(v * v for v in short)
            b2 = sum(v * v for v in red.columns[0])
            assert b2 <= 2 ** (n - 1) * s2

    def test_float_mode(self):
        rng = np.random.default_rng(37)
        for _ in range(10):
            cols = random_unimodular_like_basis(rng, 4)
            basis = lattice_basis([[float(v) for v in c] for c in cols],
                                  exact=False)
            red, u = lll_reduce(basis, LllParams(mode="float"))
            assert is_lll_reduced(red, LllParams(mode="float"))
            assert u.is_unimodular()

    def test_delta_validation(self):
        with pytest.raises(DomainError):
            LllParams(delta=mpq(1, 5))
        with pytest.raises(DomainError):
            LllParams(delta=mpq(9999, 10000))
        LllParams(delta=mpq(999, 1000))


class TestBruteForce:
    def test_identity_lattice(self):
        v = brute_force_shortest(lattice_basis([(1, 0), (0, 1)]))
        assert sum(x * x for x in v) == 1

    def test_hand_lattice(self):
        v = brute_force_shortest(lattice_basis([(2, 0), (1, 1)]))
        assert sum(x * x for x in v) == 2  # (1,1) and (1,-1) both length sqrt 2

    def test_rational_alpha_reaches_zero_dist(self):
        lam = LambdaT.build((mpq(2, 5),), mpq(1, 10000))
        red, _ = lll_reduce(lam.basis)
        v = brute_force_shortest(red)
        # the vector with q = 5 has first coordinate exactly 0
        assert v[0] == 0 and abs(v[1]) == mpq(5, 10000)

    def test_dimension_limit(self):
        with pytest.raises(DomainError):
            brute_force_shortest(lattice_basis(
                [[1 if i == j else 0 for i in range(5)] for j in range(5)]))


class TestSimultaneousApprox:
    def test_exact_rational_recovered(self):
        ap = simultaneous_approx(["2/5"], "1e-4")
        assert ap.record.q == 5 and ap.record.p == (2,)
        assert float(ap.record.error) == 0

    def test_zero_vector(self):
        ap = simultaneous_approx([0, 0], "1e-5")
        assert ap.record.q == 1 and ap.record.p == (0, 0)

    def test_two_dim_bounds(self):
        a = [rat(math.sqrt(2) - 1), rat(math.sqrt(3) - 1)]
        ap = simultaneous_approx(a, "1e-6")
        bound = 2 ** 0.5 * 1e-2
        for i in range(2):
            assert abs(float(ap.record.p[i] - ap.record.q * a[i])) <= bound

    def test_domain_checks(self):
        with pytest.raises(DomainError):
            simultaneous_approx([0.5], 2)
        with pytest.raises(DomainError):
            simultaneous_approx([1.5], "1e-3")


class TestIterated:
    def test_singleton(self):
        out = iterated_approx(["1/3"], "1e-2", "0.1", 1)
        assert len(out) == 1

    def test_golden_subsequence_of_best(self):
        phi = rat((math.sqrt(5) - 1) / 2)
        out = iterated_approx([phi], "0.1", "0.1", 6)
        qs = [ap.record.q for ap in out]
        best = best_approximations(float(phi), max(qs) + 1).qs
        assert all(q in best for q in qs)
        assert qs == sorted(set(qs))

    def test_dirichlet_ratio_bound_d2(self):
        rng = np.random.default_rng(41)
        for _ in range(5):
            a = [rat(float(v)) for v in rng.uniform(0, 1, 2)]
            out = iterated_approx(a, "1e-2", "0.2", 12)
            for ap in out:
                assert float(ap.record.dirichlet_ratio) <= 2 ** (3 / 4) + 1e-9
