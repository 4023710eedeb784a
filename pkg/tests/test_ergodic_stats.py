import math

import gmpy2
import numpy as np
import pytest
from gmpy2 import mpq

from mdcf import _kernels
from mdcf.cf_algorithms import parse_algorithm
from mdcf.core_numerics import rat
from mdcf.errors import DomainError
from mdcf.ergodic_stats import (LEVY_EXPONENT, LOCHS_LIMIT, ThetaSequence,
                                best_approx_determinants, best_approximations,
                                borel_tong_check, cf_digits_of_rational,
                                convergent_denominators, digit_frequency,
                                doeblin_lenstra, doeblin_lenstra_cdf,
                                empirical_density, gauss_digit_density,
                                gauss_digit_ensemble, lochs_ensemble, lochs_mn,
                                lochs_ratio, theta_ensemble,
                                theta_pair_histogram, theta_sequence_exact)

PHI = (math.sqrt(5) - 1) / 2


class TestClosedForms:
    def test_digit_density(self):
        assert abs(gauss_digit_density(1) - 0.41504) < 1e-4
        assert abs(gauss_digit_density(2) - 0.16993) < 1e-4
        total = sum(gauss_digit_density(j) for j in range(1, 101))
        assert total < 1
        assert total > 0.98

    def test_doeblin_lenstra_cdf(self):
        assert abs(doeblin_lenstra_cdf(0.25) - 0.36067) < 1e-4
        assert abs(doeblin_lenstra_cdf(0.5) - 0.72135) < 1e-4
        assert abs(doeblin_lenstra_cdf(0.75) - 0.94563) < 1e-4
        assert doeblin_lenstra_cdf(1.0) == pytest.approx(1.0, abs=1e-12)
        zs = np.linspace(0, 1, 41)
        vals = [doeblin_lenstra_cdf(z) for z in zs]
        assert all(vals[i] <= vals[i + 1] + 1e-12 for i in range(40))

    def test_constants(self):
        assert abs(LEVY_EXPONENT - 1.18657) < 1e-5
        assert abs(LOCHS_LIMIT - 0.97027) < 1e-5


class TestDigitEnsemble:
    def test_frequencies_and_levy(self):
        ens = gauss_digit_ensemble(20, 20000, seed=101)
        f1, se1 = digit_frequency(ens, 1)
        assert abs(f1 - gauss_digit_density(1)) < 4 * se1 + 0.004
        from mdcf.ergodic_stats import levy_exponent
        lv, se = levy_exponent(ens)
        assert abs(lv - LEVY_EXPONENT) < 4 * se + 0.004

    def test_reproducible(self):
        a = gauss_digit_ensemble(5, 5000, seed=7)
        b = gauss_digit_ensemble(5, 5000, seed=7)
        assert np.array_equal(a.per_orbit_freq, b.per_orbit_freq)
        assert np.array_equal(a.levy_per_orbit, b.levy_per_orbit)


class TestTheta:
    def test_exact_vs_recurrence_routes(self):
        # route A: exact integer p,q with a high-precision orbit
        # route B: the multiplicative recurrence at the same precision
        n = 150
        from mdcf.core_numerics import local_precision
        with local_precision(4 * n + 64):
            x = gmpy2.sqrt(gmpy2.mpfr(2)) - 1
            seq_a = theta_sequence_exact(x, n)
            y = gmpy2.mpfr(x)
            r = gmpy2.mpfr(0)
            th = abs(y)
            theta_b = [float(th)]
            for _ in range(n):
                inv = 1 / y
                a = int(gmpy2.floor(inv))
                y = inv - a
                den = a + r
                th = th * y * den
                r = 1 / den
                theta_b.append(float(th))
        rel = np.abs(seq_a.entries - np.array(theta_b)) / np.maximum(
            seq_a.entries, 1e-300)
        assert rel.max() < 1e-10

    def test_double_kernel_in_tracking_window(self):
        xd = float(gmpy2.sqrt(gmpy2.mpfr(2)) - 1)
        seq_a = theta_sequence_exact(rat(xd), 30)
        digs, theta, _, count = _kernels.gauss_theta_run(xd, 30)
        assert count == 30
        w = 0
        while w < 30 and digs[w] == seq_a.digits[w]:
            w += 1
        assert w >= 10
        m = w - 10  # Theta_j sensitivity to the tail decays ~ (q_j/q_w)^2
        rel = np.abs(theta[:m] - seq_a.entries[:m]) / seq_a.entries[:m]
        assert rel.max() < 1e-6

    def test_theta_in_unit_interval(self):
        ens = theta_ensemble(5, 5000, seed=11)
        for seq in ens.orbits:
            assert seq.entries.min() >= 0
            assert seq.entries.max() < 1

    def test_doeblin_lenstra_empirical(self):
        ens = theta_ensemble(15, 5000, seed=13)
        for z in (0.25, 0.5, 0.75):
            val, se = doeblin_lenstra(ens, z)
            assert abs(val - doeblin_lenstra_cdf(z)) < 4 * se + 0.01
        assert doeblin_lenstra(ens, 1.0)[0] == 1.0

    def test_pair_histogram(self):
        ens = theta_ensemble(3, 2000, seed=17)
        hist = theta_pair_histogram(ens, bins=20)
        assert hist.shape == (20, 20)
        assert hist.sum() == 3 * 2000


class TestBorelTong:
    def test_zero_violations_on_ensemble(self):
        ens = theta_ensemble(20, 5000, seed=19)
        assert sum(borel_tong_check(s) for s in ens.orbits) == 0

    def test_golden_ratio_bound_exact(self):
        # noble numbers sit on the boundary of Borel's inequality, so the
        # constant-digit case needs exact rational comparisons
        from mdcf.ergodic_stats import borel_tong_check_exact, theta_rational
        fib = [1, 1]
        while len(fib) < 42:
            fib.append(fib[-1] + fib[-2])
        digits, thetas = theta_rational(mpq(fib[39], fib[40]), 30)
        assert all(a == 1 for a in digits[:30])
        assert borel_tong_check_exact(digits, thetas) == 0
        assert min(thetas[5:25]) ** 2 * 5 < 1

    def test_detects_planted_violation(self):
        seq = ThetaSequence(np.array([1, 1, 1, 1]),
                            np.array([0.9, 0.9, 0.9, 0.9, 0.9]))
        assert borel_tong_check(seq) > 0


class TestLochs:
    def test_rational_cf(self):
        assert cf_digits_of_rational(2, 5) == [2, 2]
        assert convergent_denominators([2, 2]) == [2, 5]

    def test_mn_monotone_in_information(self):
        assert lochs_mn(31415926, 8) <= lochs_mn(3141592653, 10) + 3

    def test_ratio_near_limit(self):
        mean, se, vals = lochs_ensemble(40, 400, seed=23)
        assert abs(mean - LOCHS_LIMIT) < 5 * se + 0.02

    def test_precision_precondition(self):
        with pytest.raises(DomainError):
            lochs_ratio(0.5, 100)  # float too coarse for n=100
        from mdcf.core_numerics import local_precision, to_real
        with local_precision(4000):
            x = to_real("1/7", 4000) + to_real("1/9999", 4000)
        r = lochs_ratio(x, 100)
        assert 0 < r < 2


class TestBestApproximations:
    def test_golden_fibonacci(self):
        ba = best_approximations(PHI, 100)
        assert ba.qs == (1, 2, 3, 5, 8, 13, 21, 34, 55, 89)

    def test_exact_termination(self):
        ba = best_approximations(mpq(2, 5), 10)
        assert ba.qs[-1] == 5
        assert float(ba.dists[-1]) == 0

    def test_strictly_improving(self):
        ba = best_approximations((math.sqrt(2) - 1, math.sqrt(3) - 1), 10**4)
        assert all(ba.qs[i] < ba.qs[i + 1] for i in range(len(ba.qs) - 1))
        assert all(ba.dists[i] > ba.dists[i + 1]
                   for i in range(len(ba.dists) - 1))

    def test_matches_convergents(self):
        rng = np.random.default_rng(27)
        for _ in range(10):
            x = float(rng.uniform(0.01, 0.99))
            xq = rat(x)
            digits = cf_digits_of_rational(int(xq.numerator),
                                           int(xq.denominator))
            qs = [1] + convergent_denominators(digits)
            dedup = [qs[0]] + [q for i, q in enumerate(qs[1:])
                               if q != qs[i]]
            expected = tuple(q for q in dedup if q <= 1000)
            assert best_approximations(x, 1000).qs == expected

    def test_determinants(self):
        dets = best_approx_determinants(best_approximations(PHI, 2000), 1)
        assert all(abs(v) == 1 for v in dets)
        ba2 = best_approximations((math.sqrt(2) - 1, math.sqrt(3) - 1), 3000)
        dets2 = best_approx_determinants(ba2, 2)
        assert len(dets2) == len(ba2.qs) - 2  # computed, values unconstrained


class TestDensity:
    def test_gauss_density(self):
        dh = empirical_density(parse_algorithm("gauss"), 50, 20000, 20, seed=31)
        xs = (np.arange(50) + 0.5) / 50
        theory = 1.0 / ((1.0 + xs) * math.log(2))
        off = np.abs(dh.density - theory) > 4 * dh.stderr + 0.01
        assert off.sum() <= 2

    def test_nijp_mass_in_every_piece(self):
        from mdcf.nijp_markov import markov_pieces
        dh = empirical_density(parse_algorithm("nijp", 2), 40, 50000, 5,
                               seed=37)
        centers = (np.arange(40) + 0.5) / 40 - 0.5
        for pid, poly in markov_pieces():
            mass = 0.0
            for i, cx in enumerate(centers):
                for j, cy in enumerate(centers):
                    if poly.contains((rat(float(cx)), rat(float(cy)))):
                        mass += dh.density[i, j]
            assert mass > 0, f"no mass in piece {pid}"

    def test_reproducible(self):
        a = empirical_density(parse_algorithm("gauss"), 30, 5000, 3, seed=5)
        b = empirical_density(parse_algorithm("gauss"), 30, 5000, 3, seed=5)
        assert np.array_equal(a.density, b.density)
