"""Matrix-product accumulation, convergent extraction and quality metrics.

The running product A(1)...A(n) of partial-quotient matrices is kept as an
exact integer matrix.  Its columns, normalized by the denominator row
(kept last), are the simultaneous rational approximations; their quality
is quantified against Dirichlet's bound.
"""

from __future__ import annotations

import math
import os
import warnings
from dataclasses import dataclass
from typing import Sequence

import gmpy2
import numpy as np
from gmpy2 import mpfr

from .cf_algorithms import AlgorithmId, CfStep
from .core_numerics import (DEFAULT_PRECISION, IntMatrix, is_exact,
                            local_precision, mat_mul, rat)
from .errors import BudgetError, DimensionError

DEFAULT_SCAN_BUDGET = int(os.environ.get("MDCF_BUDGET", 10 ** 7))


@dataclass(frozen=True)
class ConvergentProduct:
    """Exact running product of partial-quotient matrices.

    ``denominator_row`` records the normalization: all algorithms in this
    package emit matrices for the homogeneous-coordinate-last convention,
    so the denominators q_j sit in the last row ("last").
    """

    matrix: IntMatrix
    n: int = 0
    algorithm: AlgorithmId | None = None
    denominator_row: str = "last"

    @staticmethod
    def identity(d: int, algorithm: AlgorithmId | None = None) -> "ConvergentProduct":
        return ConvergentProduct(IntMatrix.identity(d + 1), 0, algorithm)

    @property
    def size(self) -> int:
        return self.matrix.dims[0]

    def denominators(self) -> tuple:
        return self.matrix.rows[-1]


def accumulate(product: ConvergentProduct, step: CfStep) -> ConvergentProduct:
    """Right-multiply the running product by one step's matrix (exact)."""
    if product.size != step.matrix.dims[0]:
        raise DimensionError(
            f"product size {product.size} != step size {step.matrix.dims[0]}")
    return ConvergentProduct(mat_mul(product.matrix, step.matrix),
                             product.n + 1, product.algorithm,
                             product.denominator_row)


@dataclass(frozen=True)
class ApproximationRecord:
    """One simultaneous rational approximation p/q of a target vector."""

    q: int
    p: tuple
    error: object          # max_i |alpha_i - p_i/q|
    dist: object           # |||q*alpha||| in the chosen norm
    dirichlet_ratio: object  # |||q*alpha||| * q^(1/d)
    exponent_sample: float | None
    norm: str = "sup"


def _dist_to_nearest(vals, norm: str):
    """|||v||| for a vector: componentwise distance to the nearest integer."""
    comps = []
    for v in vals:
        fl = math.floor(v + 0.5) if not isinstance(v, mpfr) else int(gmpy2.floor(v + 0.5))
        comps.append(abs(v - fl))
    if norm == "sup":
        return max(comps)
    if norm == "euclid":
        s = sum(c * c for c in comps)
        return gmpy2.sqrt(s) if isinstance(s, (mpfr,)) else math.sqrt(s)
    raise ValueError(f"unknown norm {norm!r}")


def make_record(q: int, p: Sequence[int], alpha: Sequence, norm: str = "sup",
                precision: int = DEFAULT_PRECISION) -> ApproximationRecord:
    """Build an ApproximationRecord with high-precision error terms."""
    d = len(alpha)
    with local_precision(precision):
        al = [mpfr(rat(a)) if is_exact(a) or isinstance(a, str) else mpfr(a)
              for a in alpha]
        err = max(abs(al[i] - mpfr(p[i]) / q) for i in range(d))
        dist = _dist_to_nearest([q * a for a in al], norm)
        ratio = dist * mpfr(q) ** (mpfr(1) / d)
        if q >= 2 and err > 0:
            expo = float(-gmpy2.log(err) / gmpy2.log(mpfr(q)))
        elif q >= 2:
            expo = math.inf
        else:
            expo = None
    return ApproximationRecord(q, tuple(int(v) for v in p), err, dist, ratio,
                               expo, norm)


def extract_approximations(product: ConvergentProduct, alpha: Sequence,
                           norm: str = "sup",
                           precision: int = DEFAULT_PRECISION) -> list:
    """One record per column with nonzero denominator (sign-normalized q > 0).

    Columns whose denominator entry is zero are skipped with a warning.
    """
    m = product.size
    if m != len(alpha) + 1:
        raise DimensionError(f"product size {m} incompatible with d={len(alpha)}")
    records = []
    for j in range(m):
        col = product.matrix.column(j)
        q = col[-1]
        if q == 0:
            warnings.warn(f"column {j} has zero denominator; skipped")
            continue
        if q < 0:
            col = tuple(-v for v in col)
            q = -q
        records.append(make_record(q, col[:-1], alpha, norm, precision))
    return records


@dataclass(frozen=True)
class ConvergenceMetrics:
    weak: float    # max angle between columns and the (alpha, 1) ray
    strong: float  # max Euclidean distance from columns to the line
    rate: float | None  # log(strong_n / strong_{n-1}) when prev is given


def convergence_metrics(product: ConvergentProduct, alpha: Sequence,
                        prev_strong: float | None = None,
                        precision: int = DEFAULT_PRECISION) -> ConvergenceMetrics:
    """Weak (angle) and strong (distance-to-line) metrics over all columns."""
    m = product.size
    with local_precision(max(precision, 64)):
        u = [mpfr(rat(a)) if is_exact(a) or isinstance(a, str) else mpfr(a)
             for a in alpha] + [mpfr(1)]
        un2 = sum(v * v for v in u)
        weak = mpfr(0)
        strong = mpfr(0)
        for j in range(m):
            col = [mpfr(v) for v in product.matrix.column(j)]
            dot = sum(c * v for c, v in zip(col, u))
            along = dot / gmpy2.sqrt(un2)
            perp_vec = [c - dot * v / un2 for c, v in zip(col, u)]
            perp = gmpy2.sqrt(sum(v * v for v in perp_vec))
            ang = gmpy2.atan2(perp, abs(along))
            weak = max(weak, ang)
            strong = max(strong, perp)
        rate = None
        if prev_strong is not None and prev_strong > 0 and strong > 0:
            rate = float(gmpy2.log(strong / prev_strong))
    return ConvergenceMetrics(float(weak), float(strong), rate)


def approximation_exponent(per_step_records: Sequence) -> float:
    """Limsup-style exponent estimate from a run of per-step records.

    Each entry is the list of records at one step; the best (largest)
    exponent sample per step is taken, and the estimate is the maximum over
    the final 20% of steps.
    """
    best = []
    for recs in per_step_records:
        samples = [r.exponent_sample for r in recs
                   if r.exponent_sample is not None]
        if samples:
            best.append(max(samples))
    if not best:
        raise ValueError("no exponent samples available")
    tail = best[int(len(best) * 0.8):]
    return float(max(tail))


def furstenberg_certificate(steps: Sequence[CfStep],
                            max_block: int | None = None) -> bool:
    """Certify cone contraction: a positive block product recurring twice.

    Scans the digit sequence for a block (same digits, hence same matrix
    product) that occurs at least twice without overlap and whose product
    is entrywise positive.  Requires non-negative step matrices.
    """
    n = len(steps)
    if n < 2:
        return False
    for s in steps:
        if any(v < 0 for row in s.matrix.rows for v in row):
            return False
    digits = [s.digits for s in steps]
    if max_block is None:
        max_block = n // 2
    for length in range(1, max_block + 1):
        first_pos: dict = {}
        for start in range(0, n - length + 1):
            key = tuple(digits[start:start + length])
            if key in first_pos:
                if start >= first_pos[key] + length:
                    prod = steps[start].matrix
                    for k in range(start + 1, start + length):
                        prod = mat_mul(prod, steps[k].matrix)
                    if all(v > 0 for row in prod.rows for v in row):
                        return True
            else:
                first_pos[key] = start
    return False


def dirichlet_oracle(alpha: Sequence, Q: int, norm: str = "sup",
                     budget: int | None = None) -> ApproximationRecord:
    """Exhaustive Dirichlet search: the q in 1..Q^d minimizing |||q*alpha|||.

    Guaranteed (and re-checked) to satisfy max_i |q*alpha_i - p_i| < 1/Q.
    """
    if Q < 1:
        raise ValueError("Q must be >= 1")
    d = len(alpha)
    qmax = Q ** d
    if budget is None:
        budget = DEFAULT_SCAN_BUDGET
    if qmax > budget:
        raise BudgetError(f"scan size Q^d = {qmax} exceeds budget {budget}")
    a = np.asarray([float(v) for v in alpha])
    best_q, best_dist = 1, None
    chunk = 1 << 16
    for lo in range(1, qmax + 1, chunk):
        qs = np.arange(lo, min(lo + chunk, qmax + 1), dtype=np.float64)
        prods = qs[:, None] * a[None, :]
        frac = np.abs(prods - np.floor(prods + 0.5))
        if norm == "sup":
            dist = frac.max(axis=1)
        elif norm == "euclid":
            dist = np.sqrt((frac * frac).sum(axis=1))
        else:
            raise ValueError(f"unknown norm {norm!r}")
        i = int(np.argmin(dist))
        if best_dist is None or dist[i] < best_dist:
            best_dist = float(dist[i])
            best_q = int(qs[i])
    p = [math.floor(best_q * float(v) + 0.5) for v in alpha]
    rec = make_record(best_q, p, alpha, norm)
    sup_err = max(abs(best_q * float(v) - pi) for v, pi in zip(alpha, p))
    if not sup_err < 1.0 / Q:
        raise AssertionError(
            f"Dirichlet guarantee failed: |||q alpha||| = {sup_err} >= 1/Q")
    return rec
