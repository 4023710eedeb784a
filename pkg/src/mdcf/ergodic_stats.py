"""Ergodic-theorem statistics for the Gauss map and empirical statistics
for the multidimensional algorithms.

Digit laws, the denominator growth rate, the distribution of the
approximation coefficients Theta_n = q_n^2 |x - p_n/q_n|, the deterministic
Borel/Tong triple inequalities, decimal-vs-CF information (Lochs), the
brute-force best-approximation oracle, and invariant-density histograms.

Long ensemble orbits run in doubles through the kernels; Theta and log q_n
use the locally stable recurrences

    r_{j+1} = 1/(a_{j+1} + r_j),   Theta_{j+1} = Theta_j x_{j+1} (a_{j+1} + r_j)

whose relative error grows only linearly in the orbit length.  An exact
route (integer p_n, q_n plus high-precision x) is provided for
cross-validation and short runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import gmpy2
import numpy as np
from gmpy2 import mpfr, mpq, mpz

from . import _kernels
from .cf_algorithms import AlgorithmId, Family, random_start, step_fn
from .core_numerics import ifloor, is_exact, local_precision, rat
from .errors import BudgetError, DomainError, OrbitHalt

LEVY_EXPONENT = math.pi ** 2 / (12 * math.log(2))
LOCHS_LIMIT = 6 * math.log(2) * math.log(10) / math.pi ** 2
MAX_RESAMPLE = 100


def gauss_digit_density(j: int) -> float:
    """Asymptotic frequency of digit j in regular CF expansions."""
    if j < 1:
        raise DomainError("digit must be >= 1")
    return (2 * math.log(1 + j) - math.log(j) - math.log(2 + j)) / math.log(2)


def doeblin_lenstra_cdf(z: float) -> float:
    """Limit distribution F(z) of the approximation coefficients."""
    if not 0 <= z <= 1:
        raise DomainError("z must lie in [0, 1]")
    if z <= 0.5:
        return z / math.log(2)
    return (1 - z + math.log(2 * z)) / math.log(2)


def _sample_x0(seed: int, orbit: int, attempt: int) -> float:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(orbit, attempt))
    return float(np.random.default_rng(ss).uniform(0.0, 1.0))


# ---------------------------------------------------------------------------
# digit-law and Levy ensemble
# ---------------------------------------------------------------------------

@dataclass
class GaussDigitEnsemble:
    n_orbits: int
    n_steps: int
    seed: int
    jmax: int
    per_orbit_freq: np.ndarray  # (orbits, jmax+1); column 0 = digits > jmax
    levy_per_orbit: np.ndarray  # (1/n) log q_n, exact integer q_n
    resampled: int


def gauss_digit_ensemble(n_orbits: int, n_steps: int, seed: int,
                         jmax: int = 100) -> GaussDigitEnsemble:
    """Digit counts and exact-denominator growth over an orbit ensemble."""
    freqs = np.zeros((n_orbits, jmax + 1))
    levy = np.zeros(n_orbits)
    resampled = 0
    for orbit in range(n_orbits):
        for attempt in range(MAX_RESAMPLE):
            digs, count = _kernels.gauss_digits(_sample_x0(seed, orbit, attempt),
                                                n_steps)
            if count == n_steps:
                break
            resampled += 1
        else:
            raise RuntimeError("too many degenerate orbits")
        clipped = np.where(digs > jmax, 0, digs)
        freqs[orbit] = np.bincount(clipped, minlength=jmax + 1) / n_steps
        q, qm1 = mpz(1), mpz(0)
        for a in digs.tolist():
            q, qm1 = a * q + qm1, q
        levy[orbit] = float(gmpy2.log(q)) / n_steps
    return GaussDigitEnsemble(n_orbits, n_steps, seed, jmax, freqs, levy,
                              resampled)


def digit_frequency(ensemble: GaussDigitEnsemble, j: int) -> tuple:
    """Empirical frequency of digit j with its cross-orbit standard error."""
    if not 1 <= j <= ensemble.jmax:
        raise DomainError(f"digit must lie in 1..{ensemble.jmax}")
    vals = ensemble.per_orbit_freq[:, j]
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(len(vals)))


def levy_exponent(ensemble: GaussDigitEnsemble) -> tuple:
    """Ensemble mean of (1/n) log q_n (q_n from exact integer convergents)."""
    vals = ensemble.levy_per_orbit
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(len(vals)))


# ---------------------------------------------------------------------------
# Theta statistics
# ---------------------------------------------------------------------------

@dataclass
class ThetaSequence:
    """Approximation coefficients Theta_0..Theta_n with aligned digits a_1..a_n."""

    digits: np.ndarray
    entries: np.ndarray


@dataclass
class ThetaEnsemble:
    n_orbits: int
    n_steps: int
    seed: int
    orbits: list  # of ThetaSequence
    resampled: int


def theta_ensemble(n_orbits: int, n_steps: int, seed: int) -> ThetaEnsemble:
    orbits = []
    resampled = 0
    for orbit in range(n_orbits):
        for attempt in range(MAX_RESAMPLE):
            digs, theta, _, count = _kernels.gauss_theta_run(
                _sample_x0(seed, orbit, attempt), n_steps)
            if count == n_steps:
                break
            resampled += 1
        else:
            raise RuntimeError("too many degenerate orbits")
        orbits.append(ThetaSequence(digs, theta))
    return ThetaEnsemble(n_orbits, n_steps, seed, orbits, resampled)


def theta_sequence_exact(x, n: int, precision: int | None = None) -> ThetaSequence:
    """Theta_n via exact integer p_n, q_n and a high-precision orbit.

    The direct q_n^2 |x - p_n/q_n| form loses all double precision near
    n ~ 35; here x is carried with enough bits that the subtraction
    q_n x - p_n stays accurate for all n requested.
    """
    if precision is None:
        precision = max(256, 4 * n + 64)
    with local_precision(precision):
        if is_exact(x) or isinstance(x, str):
            xv = mpfr(rat(x))
        else:
            xv = mpfr(x)
        if not 0 < xv < 1:
            raise DomainError("x must lie in (0, 1)")
        digits = np.zeros(n, dtype=np.int64)
        entries = np.zeros(n + 1)
        q, qm1 = mpz(1), mpz(0)
        p, pm1 = mpz(0), mpz(1)
        entries[0] = float(abs(xv))
        y = xv
        for i in range(n):
            if y == 0:
                raise OrbitHalt("rational input terminated")
            inv = 1 / y
            a = ifloor(inv)
            if a >= 1 << 62:
                raise OrbitHalt("precision exhausted (rational input?)")
            y = inv - a
            digits[i] = a
            q, qm1 = a * q + qm1, q
            p, pm1 = a * p + pm1, p
            entries[i + 1] = float(q * abs(q * xv - p))
    return ThetaSequence(digits, entries)


def doeblin_lenstra(ensemble: ThetaEnsemble, z: float) -> tuple:
    """Empirical CDF of Theta at z, with cross-orbit standard error."""
    if not 0 <= z <= 1:
        raise DomainError("z must lie in [0, 1]")
    vals = np.array([(seq.entries[1:] <= z).mean() for seq in ensemble.orbits])
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(len(vals)))


def borel_tong_check(seq: ThetaSequence) -> int:
    """Count violations of the deterministic triple inequalities.

    For every n >= 1: min(Theta_{n-1}, Theta_n, Theta_{n+1}) must be
    < 1/sqrt(a_{n+1}^2 + 4) and the max must exceed it.  Returns 0 on any
    correct orbit.
    """
    th = seq.entries
    n = len(seq.digits)
    if n < 2:
        return 0
    triple = np.stack([th[0:n - 1], th[1:n], th[2:n + 1]])
    bound = 1.0 / np.sqrt(seq.digits[1:n].astype(np.float64) ** 2 + 4.0)
    mn = triple.min(axis=0)
    mx = triple.max(axis=0)
    return int((mn >= bound).sum() + (mx <= bound).sum())


def theta_rational(x, n: int) -> tuple:
    """Exact digits and Theta values (as rationals) for a rational x.

    Stops early if the expansion terminates; returns (digits, thetas) with
    thetas[j] = Theta_j exactly.
    """
    xq = rat(x)
    if not 0 < xq < 1:
        raise DomainError("x must lie in (0, 1)")
    digits = []
    thetas = [abs(xq)]
    q, qm1 = mpz(1), mpz(0)
    p, pm1 = mpz(0), mpz(1)
    y = xq
    for _ in range(n):
        if y == 0:
            break
        inv = 1 / y
        a = ifloor(inv)
        y = inv - a
        digits.append(a)
        q, qm1 = a * q + qm1, q
        p, pm1 = a * p + pm1, p
        thetas.append(q * abs(q * xq - p))
    return digits, thetas


def borel_tong_check_exact(digits, thetas) -> int:
    """Exact-rational version of :func:`borel_tong_check`.

    Compares min/max of the Theta triple against 1/sqrt(a^2+4) by squaring,
    so even boundary cases (noble numbers) are decided exactly.
    """
    viol = 0
    n = len(digits)
    for i in range(1, n - 1):
        triple = (thetas[i - 1], thetas[i], thetas[i + 1])
        a = digits[i]
        scale = a * a + 4
        lo = min(triple)
        hi = max(triple)
        if not lo * lo * scale < 1:
            viol += 1
        if not hi * hi * scale > 1:
            viol += 1
    return viol


def theta_pair_histogram(ensemble: ThetaEnsemble, bins: int = 50) -> np.ndarray:
    """Joint occupancy of (Theta_{j-1}, Theta_j); empirical output only."""
    hist = np.zeros((bins, bins), dtype=np.int64)
    for seq in ensemble.orbits:
        a = np.clip((seq.entries[:-1] * bins).astype(int), 0, bins - 1)
        b = np.clip((seq.entries[1:] * bins).astype(int), 0, bins - 1)
        np.add.at(hist, (a, b), 1)
    return hist


# ---------------------------------------------------------------------------
# Lochs: decimal digits vs CF digits
# ---------------------------------------------------------------------------

def cf_digits_of_rational(num: int, den: int, max_digits: int | None = None) -> list:
    """Exact regular CF digits of num/den in (0, 1) via Euclid."""
    if not 0 <= num <= den or den <= 0:
        raise DomainError("need 0 <= num/den <= 1")
    digits = []
    p, q = num, den
    while p != 0:
        digits.append(q // p)
        p, q = q % p, p
        if max_digits is not None and len(digits) >= max_digits:
            break
    return digits


def convergent_denominators(digits: Sequence[int]) -> list:
    """Exact denominators q_1, q_2, ... from a digit sequence."""
    out = []
    q, qm1 = mpz(1), mpz(0)
    for a in digits:
        q, qm1 = a * q + qm1, q
        out.append(int(q))
    return out


def lochs_mn(prefix: int, n: int) -> int:
    """CF digits determined by the first n decimal digits (given as an int).

    Compares the exact CF expansions of prefix/10^n and (prefix+1)/10^n;
    every x between them shares the common digit prefix.  Termination of
    either expansion shortens the count by one (conservative).
    """
    if not 0 <= prefix < 10 ** n:
        raise DomainError("prefix must have at most n digits")
    base = 10 ** n
    d1 = cf_digits_of_rational(prefix, base)
    d2 = cf_digits_of_rational(prefix + 1, base)
    m = 0
    for a, b in zip(d1, d2):
        if a != b:
            return m
        m += 1
    return max(min(len(d1), len(d2)) - 1, 0)


def lochs_ratio(x, n: int) -> float:
    """m_n / n for one x; x must carry at least 4n bits."""
    if isinstance(x, mpfr):
        if x.precision < 4 * n:
            raise DomainError(f"x needs >= {4 * n} bits, has {x.precision}")
        xv = x
    elif is_exact(x) or isinstance(x, str):
        xv = rat(x)
    else:
        if 4 * n > 53:
            raise DomainError("float input too coarse; pass mpfr or a rational")
        xv = x
    if not 0 < xv < 1:
        raise DomainError("x must lie in (0, 1)")
    prefix = ifloor(xv * 10 ** n)
    return lochs_mn(prefix, n) / n


def lochs_ensemble(n_samples: int, n: int, seed: int) -> tuple:
    """Mean and stderr of m_n/n over uniformly random decimal prefixes."""
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed))
    base = 10 ** n
    vals = np.zeros(n_samples)
    for i in range(n_samples):
        # a uniform n-digit prefix, assembled from digit blocks
        prefix = 0
        for _ in range(n):
            prefix = prefix * 10 + int(rng.integers(0, 10))
        if prefix == 0 or prefix == base - 1:
            prefix = 1
        vals[i] = lochs_mn(prefix, n) / n
    return (float(vals.mean()),
            float(vals.std(ddof=1) / math.sqrt(n_samples)), vals)


# ---------------------------------------------------------------------------
# brute-force best approximations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BestApproxList:
    """Strict record minima of |||q alpha||| for q = 1..Q."""

    alpha: tuple
    Q: int
    norm: str
    qs: tuple
    ps: tuple      # tuple of integer vectors
    dists: tuple   # strictly decreasing


def best_approximations(alpha, Q: int, norm: str = "sup",
                        budget: int | None = None) -> BestApproxList:
    """Exhaustive scan q = 1..Q; exact when alpha is rational, else floats."""
    if isinstance(alpha, (int, float, str, mpq)) or not hasattr(alpha, "__len__"):
        alpha = (alpha,)
    alpha = tuple(alpha)
    d = len(alpha)
    if budget is None:
        budget = 10 ** 7
    if Q * d > budget * 10:
        raise BudgetError(f"scan Q*d = {Q * d} too large")
    exact = all(is_exact(a) or isinstance(a, str) for a in alpha)
    if exact:
        return _best_approx_exact(alpha, Q, norm)
    return _best_approx_float(alpha, Q, norm)


def _best_approx_exact(alpha, Q, norm):
    avals = [rat(a) for a in alpha]
    nums = [a.numerator for a in avals]
    dens = [a.denominator for a in avals]
    qs, ps, dists = [], [], []
    best = None
    for q in range(1, Q + 1):
        comps = []
        pvec = []
        for i in range(len(avals)):
            r = (q * nums[i]) % dens[i]
            comps.append(mpq(min(r, dens[i] - r), dens[i]))
            pvec.append(int((q * nums[i] + dens[i] // 2) // dens[i]))
        if norm == "sup":
            dist = max(comps)
        elif norm == "euclid":
            dist = sum(c * c for c in comps)  # compare squared, exact
        else:
            raise DomainError(f"unknown norm {norm!r}")
        if best is None or dist < best:
            best = dist
            qs.append(q)
            ps.append(tuple(pvec))
            dists.append(dist if norm == "sup" else dist)
            if dist == 0:
                break
    if norm == "euclid":
        dists = [math.sqrt(float(v)) for v in dists]
    return BestApproxList(tuple(avals), Q, norm, tuple(qs), tuple(ps),
                          tuple(dists))


def _best_approx_float(alpha, Q, norm):
    a = np.asarray([float(v) for v in alpha])
    qs, ps, dists = [], [], []
    best = math.inf
    chunk = 1 << 16
    for lo in range(1, Q + 1, chunk):
        qv = np.arange(lo, min(lo + chunk, Q + 1), dtype=np.float64)
        prod = qv[:, None] * a[None, :]
        near = np.floor(prod + 0.5)
        frac = np.abs(prod - near)
        if norm == "sup":
            dist = frac.max(axis=1)
        elif norm == "euclid":
            dist = np.sqrt((frac * frac).sum(axis=1))
        else:
            raise DomainError(f"unknown norm {norm!r}")
        run = np.minimum.accumulate(np.concatenate(([best], dist)))[:-1]
        hits = np.nonzero(dist < run)[0]
        for i in hits.tolist():
            qs.append(int(qv[i]))
            ps.append(tuple(int(v) for v in near[i]))
            dists.append(float(dist[i]))
        best = min(best, float(dist.min()))
        if best == 0.0:
            break
    return BestApproxList(tuple(float(v) for v in a), Q, norm, tuple(qs),
                          tuple(ps), tuple(dists))


def best_approx_determinants(ba: BestApproxList, d: int) -> list:
    """Exact determinants of consecutive best-approximation vector matrices."""
    from .core_numerics import IntMatrix

    if len(ba.qs) < d + 1:
        raise DomainError("need at least d+1 records")
    vecs = [tuple(p) + (q,) for p, q in zip(ba.ps, ba.qs)]
    out = []
    for i in range(len(vecs) - d):
        out.append(IntMatrix(tuple(vecs[i:i + d + 1])).det())
    return out


# ---------------------------------------------------------------------------
# empirical invariant densities
# ---------------------------------------------------------------------------

@dataclass
class DensityHistogram:
    algorithm: AlgorithmId
    bins: int
    n_steps: int
    n_orbits: int
    seed: int
    lo: float
    hi: float
    density: np.ndarray   # mean normalized density (1-D or 2-D)
    stderr: np.ndarray
    resampled: int


def empirical_density(alg: AlgorithmId, bins: int, n_steps: int,
                      n_orbits: int, seed: int) -> DensityHistogram:
    """Seed-reproducible orbit-occupancy histogram over the domain."""
    if bins < 10:
        raise DomainError("bins must be >= 10")
    fam = alg.family
    twod = fam in (Family.NIJP, Family.JACOBI_PERRON) and alg.d == 2
    lo, hi = ((-0.5, 0.5) if fam in (Family.NIJP, Family.NEAREST_INT_GAUSS)
              else (0.0, 1.0))
    shape = (bins, bins) if twod else (bins,)
    per_orbit = np.zeros((n_orbits,) + shape)
    resampled = 0
    for orbit in range(n_orbits):
        for attempt in range(MAX_RESAMPLE):
            ss = np.random.SeedSequence(entropy=seed, spawn_key=(orbit, attempt))
            rng = np.random.default_rng(ss)
            x0 = np.asarray(random_start(alg, rng), dtype=np.float64)
            hist, count = _occupancy(alg, x0, n_steps, bins, lo)
            if count == n_steps:
                break
            resampled += 1
        else:
            raise RuntimeError("too many degenerate orbits")
        width = (hi - lo) / bins
        cell = width if not twod else width * width
        per_orbit[orbit] = hist / (n_steps * cell)
    return DensityHistogram(
        alg, bins, n_steps, n_orbits, seed, lo, hi,
        per_orbit.mean(axis=0),
        per_orbit.std(axis=0, ddof=1) / math.sqrt(n_orbits),
        resampled)


def _occupancy(alg: AlgorithmId, x0, n: int, bins: int, lo: float):
    fam = alg.family
    if fam is Family.GAUSS:
        return _kernels.gauss_occupancy(float(x0[0]), n, bins)
    if fam in (Family.NIJP, Family.JACOBI_PERRON) and alg.d == 2:
        return _kernels.plane_occupancy(x0, n, bins, fam is Family.NIJP, lo)
    # generic slow path for the remaining algorithms
    fn = step_fn(alg)
    hist = np.zeros(bins, dtype=np.int64)
    state = tuple(float(v) for v in x0)
    for i in range(n):
        b = int((state[0] - lo) * bins / (1.0 if lo == 0.0 else 1.0))
        hist[min(max(b, 0), bins - 1)] += 1
        try:
            state = fn(state).next_state
        except (OrbitHalt, ZeroDivisionError):
            return hist, i
    return hist, n
