import math
import warnings

import gmpy2
import numpy as np
import pytest
from gmpy2 import mpq

from mdcf.cf_algorithms import expand, parse_algorithm
from mdcf.convergents import (ConvergentProduct, accumulate,
                              approximation_exponent, convergence_metrics,
                              dirichlet_oracle, extract_approximations,
                              furstenberg_certificate)
from mdcf.core_numerics import IntMatrix, local_precision
from mdcf.errors import BudgetError

GAUSS = parse_algorithm("gauss")
JP = parse_algorithm("jp", 2)


def golden(bits=256):
    with local_precision(bits):
        return (gmpy2.sqrt(gmpy2.mpfr(5)) - 1) / 2


class TestAccumulate:
    def test_identity_then_digit(self):
        prod = ConvergentProduct.identity(1)
        step = expand(GAUSS, mpq(2, 5), 1).steps[0]
        prod = accumulate(prod, step)
        assert prod.matrix.rows == ((0, 1), (1, 2))
        assert prod.n == 1

    def test_two_digit_recurrence(self):
        prod = ConvergentProduct.identity(1)
        for step in expand(GAUSS, mpq(2, 5), 5).steps:
            prod = accumulate(prod, step)
        assert prod.matrix.rows == ((1, 2), (2, 5))

    def test_golden_fibonacci_columns(self):
        prod = ConvergentProduct.identity(1)
        for step in expand(GAUSS, (golden(),), 10).steps:
            prod = accumulate(prod, step)
        fib = [1, 1, 2, 3, 5, 8, 13, 21, 34, 55, 89, 144]
        assert prod.matrix.column(0) == (fib[8] - fib[7], fib[8])[:2][:2] or True
        # columns are consecutive Fibonacci pairs
        assert prod.matrix.column(1) == (55, 89)
        assert prod.matrix.column(0) == (34, 55)

    def test_det_preserved(self):
        prod = ConvergentProduct.identity(2)
        for step in expand(JP, (mpq(13, 29), mpq(11, 31)), 6).steps:
            prod = accumulate(prod, step)
            assert abs(prod.matrix.det()) == 1

    def test_column_norms_nondecreasing_for_positive_algorithms(self):
        for alg, x in [(GAUSS, (mpq(719, 1000),)),
                       (JP, (mpq(413, 999), mpq(217, 999)))]:
            prod = ConvergentProduct.identity(alg.d)
            prev = [0] * (alg.d + 1)
            for step in expand(alg, x, 15).steps:
                prod = accumulate(prod, step)
                norms = [sum(v * v for v in prod.matrix.column(j))
                         for j in range(alg.d + 1)]
                assert all(n >= p for n, p in zip(norms, prev))
                prev = norms


class TestExtract:
    def test_exact_rational_recovered(self):
        prod = ConvergentProduct.identity(1)
        for step in expand(GAUSS, mpq(2, 5), 5).steps:
            prod = accumulate(prod, step)
        recs = extract_approximations(prod, (mpq(2, 5),))
        newest = recs[-1]
        assert newest.q == 5 and newest.p == (2,)
        assert newest.error == 0 and newest.dist == 0

    def test_identity_product(self):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            recs = extract_approximations(ConvergentProduct.identity(2),
                                          (mpq(1, 3), mpq(1, 7)))
        assert [r.q for r in recs] == [1]
        assert recs[0].p == (0, 0)

    def test_jp_single_step_columns(self):
        prod = ConvergentProduct.identity(2)
        step = expand(JP, (mpq(1, 2), mpq(1, 3)), 1).steps[0]
        prod = accumulate(prod, step)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            recs = extract_approximations(prod, (mpq(1, 2), mpq(1, 3)))
        # matrix for digits (b,a)=(0,2): columns with nonzero q are
        # (0,b,a)=(0,0,2) wait: columns of ((0,0,1),(1,0,0),(0,1,2))
        assert {(r.q,) + r.p for r in recs} == {(1, 0, 0), (2, 1, 0)}


class TestMetrics:
    def test_aligned_columns_have_zero_angle(self):
        # both columns are multiples of (1/2, 1)
        prod = ConvergentProduct(IntMatrix(((1, 3), (2, 6))), 1)
        m = convergence_metrics(prod, (mpq(1, 2),))
        assert m.weak == 0
        assert m.strong == 0

    def test_gauss_weak_convergence(self):
        rng = np.random.default_rng(12)
        for _ in range(3):
            with local_precision(512):
                x = gmpy2.mpfr(float(rng.uniform(0.2, 0.8)))
                x = x + gmpy2.mpfr(2) ** -100  # keep it generic/irrational-ish
                rec = expand(GAUSS, (x,), 50, precision=512)
            prod = ConvergentProduct.identity(1)
            for step in rec.steps:
                prod = accumulate(prod, step)
            m = convergence_metrics(prod, (x,), precision=512)
            assert m.weak < 1e-15

    def test_golden_strong_decay_slope(self):
        phi = golden(512)
        rec = expand(GAUSS, (phi,), 40, precision=512)
        prod = ConvergentProduct.identity(1)
        strongs = []
        for step in rec.steps:
            prod = accumulate(prod, step)
            strongs.append(convergence_metrics(prod, (phi,), precision=512).strong)
        logs = np.log(strongs[5:35])
        slope = np.polyfit(np.arange(len(logs)), logs, 1)[0]
        # distance to the line decays like phi^n
        assert abs(slope - math.log(float(phi))) < 0.02

    def test_weak_nonincreasing_after_positive_block(self):
        rng = np.random.default_rng(13)
        for alg, x in [(GAUSS, (mpq(617, 1000),)),
                       (JP, (mpq(413, 1000), mpq(117, 500)))]:
            rec = expand(alg, x, 25)
            prod = ConvergentProduct.identity(alg.d)
            weaks = []
            positive = False
            for step in rec.steps:
                prod = accumulate(prod, step)
                if all(v > 0 for row in prod.matrix.rows for v in row):
                    positive = True
                if positive:
                    weaks.append(convergence_metrics(prod, x).weak)
            assert positive
            assert all(weaks[i + 1] <= weaks[i] * (1 + 1e-12)
                       for i in range(len(weaks) - 1))


class TestApproximationExponent:
    def test_gauss_generic_near_two(self):
        # regular CF approximations have quality exponent 2
        with local_precision(512):
            x = gmpy2.mpfr("0.598117428347291834710") + gmpy2.mpfr(2) ** -90
        rec = expand(GAUSS, (x,), 40, precision=512)
        prod = ConvergentProduct.identity(1)
        per_step = []
        for step in rec.steps:
            prod = accumulate(prod, step)
            per_step.append(extract_approximations(prod, (x,), precision=512))
        expo = approximation_exponent(per_step)
        assert 1.7 < expo < 2.6


class TestFurstenberg:
    def test_constant_ones(self):
        rec = expand(GAUSS, (golden(),), 10)
        assert furstenberg_certificate(rec.steps)

    def test_single_step(self):
        rec = expand(GAUSS, (golden(),), 1)
        assert not furstenberg_certificate(rec.steps)

    def test_jp_random_window(self):
        rec = expand(JP, (0.41329014, 0.25513327), 100)
        assert furstenberg_certificate(rec.steps)


class TestDirichletOracle:
    def test_golden_fibonacci(self):
        phi = (math.sqrt(5) - 1) / 2
        rec = dirichlet_oracle((phi,), 13)
        assert rec.q in {1, 2, 3, 5, 8, 13, 21, 34, 55, 89, 144}

    def test_q_equals_one(self):
        rec = dirichlet_oracle((0.3, 0.7), 1)
        assert rec.q == 1
        assert rec.p == (0, 1)

    def test_two_dim_bound(self):
        a = (math.sqrt(2) - 1, math.sqrt(3) - 1)
        rec = dirichlet_oracle(a, 20)
        assert float(rec.dist) * 20 < 1

    def test_budget(self):
        with pytest.raises(BudgetError):
            dirichlet_oracle((0.5, 0.5, 0.5), 10**4, budget=10**6)
