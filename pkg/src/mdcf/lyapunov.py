"""Monte Carlo estimation of the two leading Lyapunov exponents.

For each trial an independent starting point is drawn, the orbit is burned
in, and an orthonormal 2-frame is pushed through the transposed
partial-quotient matrices with periodic re-orthonormalization.  lambda_1
accumulates from the first frame vector, lambda_1 + lambda_2 from the
frame volume.  Trials that hit a rational point are discarded and
resampled; the count is reported.

Orbits run in hardware doubles by default; ``mode="highprec"`` runs the
same scheme in gmpy2 arithmetic at a configurable precision to bound the
shadowing bias of the double-precision orbits.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import gmpy2
import numpy as np
from gmpy2 import mpfr

from . import _kernels
from .cf_algorithms import AlgorithmId, Family, random_start, step_fn
from .core_numerics import local_precision
from .errors import BudgetError, DomainError

_SUBTRACTIVE_RULE = {
    Family.BRUN: _kernels.RULE_BRUN,
    Family.SELMER: _kernels.RULE_SELMER,
    Family.POINCARE: _kernels.RULE_POINCARE,
    Family.FULLY_SUBTRACTIVE: _kernels.RULE_FULLSUB,
}

MAX_RESAMPLE_PER_TRIAL = 100


@dataclass
class LyapunovEstimate:
    """Result of one Monte Carlo Lyapunov run."""

    algorithm: AlgorithmId
    lambda1: float
    lambda2: float
    stderr1: float
    stderr2: float
    n: int
    trials: int
    seed: int
    k: int = 10
    burn_in: int = 1000
    mode: str = "double"
    precision: int = 53
    resampled: int = 0
    per_trial_lambda1: np.ndarray | None = field(default=None, repr=False)
    per_trial_lambda2: np.ndarray | None = field(default=None, repr=False)
    log_norm_hist: np.ndarray | None = field(default=None, repr=False)

    @property
    def eta_star(self) -> float:
        return 1.0 - self.lambda2 / self.lambda1

    @property
    def eta_star_stderr(self) -> float:
        return math.sqrt((self.stderr2 / self.lambda1) ** 2
                         + (self.lambda2 * self.stderr1 / self.lambda1 ** 2) ** 2)


def eta_star(est: LyapunovEstimate) -> tuple:
    """Uniform approximation exponent 1 - lambda2/lambda1 with its stderr."""
    if est.lambda1 <= 0:
        raise DomainError("eta* undefined: lambda1 <= 0")
    return est.eta_star, est.eta_star_stderr


def _double_trial(alg: AlgorithmId, x0: np.ndarray, n: int, k: int, burn: int):
    fam = alg.family
    if fam in (Family.GAUSS, Family.JACOBI_PERRON):
        return _kernels.lyap_pq(x0, n, k, burn, False)
    if fam in (Family.NEAREST_INT_GAUSS, Family.NIJP):
        return _kernels.lyap_pq(x0, n, k, burn, True)
    if fam is Family.FAREY:
        return _kernels.lyap_farey(float(x0[0]), n, k, burn)
    return _kernels.lyap_subtractive(x0, n, k, burn, _SUBTRACTIVE_RULE[fam])


def _reference_trial(alg: AlgorithmId, x0, n: int, k: int, burn: int,
                     precision: int = 256, arith: str = "mpfr"):
    """Frame scheme driven through the step functions (mpfr or float).

    Serves as the high-precision mode and as the independent reference the
    double-precision kernels are validated against.
    """
    fn = step_fn(alg)
    m = alg.d + 1
    mpfr_mode = arith == "mpfr"
    ctx = local_precision(precision) if mpfr_mode else None
    sqrt = gmpy2.sqrt if mpfr_mode else math.sqrt
    log = gmpy2.log if mpfr_mode else math.log

    # the subtractive kernels track frames in tuple coordinates (leading
    # entry first); that differs from the homogeneous-last convention by a
    # fixed rotation, so start the frame at the conjugated basis vectors
    if alg.family in _SUBTRACTIVE_RULE:
        i1, i2 = m - 1, 0
    else:
        i1, i2 = 0, 1

    def run():
        state = tuple(mpfr(v) for v in x0) if mpfr_mode else tuple(
            float(v) for v in x0)
        one = mpfr(1) if mpfr_mode else 1.0
        zero = one - one
        v1 = [zero] * m
        v2 = [zero] * m
        v1[i1] = one
        v2[i2] = one
        s1 = zero
        s12 = zero
        cur = state
        for phase in range(2):
            limit = burn if phase == 0 else n
            since = 0
            for step_i in range(limit):
                try:
                    step = fn(cur)
                except Exception:
                    return None
                cur = step.next_state
                at = step.matrix.transpose()
                w1 = list(at.apply(v1))
                w2 = list(at.apply(v2))
                n1 = sum(v * v for v in w1)
                pr = sum(a * b for a, b in zip(w1, w2))
                c = pr / n1
                w2 = [b - c * a for a, b in zip(w1, w2)]
                v1, v2 = w1, w2
                since += 1
                if since == k or step_i == limit - 1:
                    r1 = sqrt(sum(v * v for v in v1))
                    r2 = sqrt(sum(v * v for v in v2))
                    if r1 == 0 or r2 == 0:
                        return None
                    v1 = [v / r1 for v in v1]
                    v2 = [v / r2 for v in v2]
                    if phase == 1:
                        s1 += log(r1)
                        s12 += log(r1) + log(r2)
                    since = 0
        return float(s1), float(s12), None

    if ctx is not None:
        with ctx:
            return run()
    return run()


def _run_trial(alg, n, k, burn, mode, precision, seed, trial):
    resamples = 0
    for attempt in range(MAX_RESAMPLE_PER_TRIAL):
        ss = np.random.SeedSequence(entropy=seed, spawn_key=(trial, attempt))
        rng = np.random.default_rng(ss)
        x0 = np.asarray(random_start(alg, rng), dtype=np.float64)
        if mode == "double":
            s1, s12, hist = _double_trial(alg, x0, n, k, burn)
            if np.isfinite(s1):
                return s1 / n, (s12 - s1) / n, resamples, hist
        else:
            out = _reference_trial(alg, x0, n, k, burn, precision)
            if out is not None:
                s1, s12, _ = out
                return s1 / n, (s12 - s1) / n, resamples, None
        resamples += 1
    raise RuntimeError(f"trial {trial}: exceeded {MAX_RESAMPLE_PER_TRIAL} resamples")


def estimate_lyapunov(alg: AlgorithmId, n: int, trials: int, seed: int,
                      k: int = 10, burn_in: int = 1000, mode: str = "double",
                      precision: int = 256, threads: int | None = None,
                      budget: int | None = None) -> LyapunovEstimate:
    """Estimate (lambda1, lambda2) over `trials` independent orbits of length n.

    Bit-reproducible for fixed (seed, n, trials, k, mode, precision): each
    trial derives its own RNG stream from (seed, trial, attempt) and the
    merge is by trial index, independent of thread scheduling.
    """
    if mode not in ("double", "highprec"):
        raise ValueError("mode must be 'double' or 'highprec'")
    if n < 1 or trials < 1:
        raise DomainError("n and trials must be positive")
    total = (n + burn_in) * trials
    if budget is not None and total > budget:
        raise BudgetError(f"step count {total} exceeds budget {budget}")
    if threads is None:
        threads = os.cpu_count() or 1
    threads = max(1, min(threads, trials))

    args = [(alg, n, k, burn_in, mode, precision, seed, t)
            for t in range(trials)]
    if threads == 1 or mode == "highprec":
        results = [_run_trial(*a) for a in args]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda a: _run_trial(*a), args))

    l1 = np.array([r[0] for r in results])
    l2 = np.array([r[1] for r in results])
    resampled = sum(r[2] for r in results)
    hist = None
    if mode == "double":
        hist = np.zeros(_kernels.LOGNORM_BINS, dtype=np.int64)
        for r in results:
            hist += r[3]
    se1 = float(l1.std(ddof=1) / math.sqrt(trials)) if trials > 1 else math.inf
    se2 = float(l2.std(ddof=1) / math.sqrt(trials)) if trials > 1 else math.inf
    return LyapunovEstimate(
        algorithm=alg, lambda1=float(l1.mean()), lambda2=float(l2.mean()),
        stderr1=se1, stderr2=se2, n=n, trials=trials, seed=seed, k=k,
        burn_in=burn_in, mode=mode,
        precision=53 if mode == "double" else precision,
        resampled=resampled, per_trial_lambda1=l1, per_trial_lambda2=l2,
        log_norm_hist=hist)
