"""LLL reduction and lattice-based simultaneous Diophantine approximation.

The reduction follows the classical two-phase scheme: make the working
vector proper (|mu_ik| <= 1/2) by integer size reductions, then swap
adjacent vectors whenever the Lovasz condition

    delta * ||b_i*||^2 <= ||b_{i+1}* + mu_{i+1,i} b_i*||^2

fails.  Exact-rational mode is authoritative (all predicates are exact);
float mode re-derives the Gram-Schmidt data every sweep so that drift
never exceeds the 1e-8 consistency threshold.

Simultaneous approximation reduces the scaled lattice generated by the
columns of M_t (identity block, last column (-alpha, t)) and reads (p, q)
off a reduced vector, re-checking the certified bounds

    |p_i - q alpha_i| <= 2^(d/4) t^(1/(d+1)),   q <= 2^(d/4) t^(-d/(d+1))

by exact rational comparisons of integer powers.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

from gmpy2 import mpq

from .convergents import ApproximationRecord, make_record
from .core_numerics import IntMatrix, iround_half_up, rat
from .errors import (BudgetError, DimensionError, DomainError, RankError)

FLOAT_PREDICATE_TOL = 1e-12


@dataclass(frozen=True)
class LllParams:
    """Reduction parameter delta in (1/4, 0.999] and the arithmetic mode."""

    delta: mpq = mpq(3, 4)
    mode: str = "exact"

    def __post_init__(self):
        object.__setattr__(self, "delta", rat(self.delta))
        if not mpq(1, 4) < self.delta <= mpq(999, 1000):
            raise DomainError(f"delta must be in (1/4, 0.999], got {self.delta}")
        if self.mode not in ("exact", "float"):
            raise DomainError(f"mode must be 'exact' or 'float', got {self.mode}")


@dataclass(frozen=True)
class LatticeBasis:
    """Ordered basis columns with optional Gram-Schmidt state.

    ``mu[i][j]`` (j < i) are the projection coefficients and
    ``bstar_sq[i]`` the squared norms of the orthogonalized vectors.
    """

    columns: tuple
    exact: bool
    mu: tuple | None = None
    bstar_sq: tuple | None = None

    @property
    def n(self) -> int:
        return len(self.columns)

    @property
    def ambient_dim(self) -> int:
        return len(self.columns[0]) if self.columns else 0

    def gram_consistent(self, tol: float = 1e-8) -> bool:
        """Check stored Gram data against a fresh recomputation."""
        if self.mu is None:
            return False
        mu, bsq = _gram([list(c) for c in self.columns], self.exact)
        for i in range(self.n):
            if self.exact:
                if bsq[i] != self.bstar_sq[i]:
                    return False
                if any(mu[i][j] != self.mu[i][j] for j in range(i)):
                    return False
            else:
                if abs(float(bsq[i] - self.bstar_sq[i])) > tol * (1 + abs(float(bsq[i]))):
                    return False
                if any(abs(float(mu[i][j] - self.mu[i][j])) > tol for j in range(i)):
                    return False
        return True


def lattice_basis(columns: Sequence[Sequence], exact: bool | None = None) -> LatticeBasis:
    cols = [list(c) for c in columns]
    if exact is None:
        exact = not any(isinstance(v, float) for c in cols for v in c)
    if exact:
        cols = [[rat(v) for v in c] for c in cols]
    else:
        cols = [[float(v) for v in c] for c in cols]
    if len({len(c) for c in cols}) > 1:
        raise DimensionError("columns of unequal length")
    return LatticeBasis(tuple(tuple(c) for c in cols), exact)


def _dot(a, b):
    return sum(x * y for x, y in zip(a, b))


def _gram(cols, exact):
    """Gram-Schmidt coefficients and squared norms; RankError on dependence."""
    n = len(cols)
    zero = mpq(0) if exact else 0.0
    mu = [[zero] * n for _ in range(n)]
    bsq = [zero] * n
    bstar = []
    for i in range(n):
        v = list(cols[i])
        for j in range(i):
            if bsq[j] == 0:
                raise RankError("dependent columns")
            mu[i][j] = _dot(cols[i], bstar[j]) / bsq[j]
            for t in range(len(v)):
                v[t] = v[t] - mu[i][j] * bstar[j][t]
        bstar.append(v)
        bsq[i] = _dot(v, v)
        if exact:
            if bsq[i] == 0:
                raise RankError("dependent columns")
        elif bsq[i] <= 0.0:
            raise RankError("dependent columns (numerically)")
    return mu, bsq


def gram_schmidt(basis: LatticeBasis) -> LatticeBasis:
    """Return the basis with mu and ||b_i*||^2 filled in."""
    mu, bsq = _gram([list(c) for c in basis.columns], basis.exact)
    return LatticeBasis(basis.columns, basis.exact,
                        tuple(tuple(row) for row in mu), tuple(bsq))


def is_lll_reduced(basis: LatticeBasis, params: LllParams | None = None) -> bool:
    """Exact (rational) or tolerance-1e-12 (float) reducedness predicate."""
    if params is None:
        params = LllParams(mode="exact" if basis.exact else "float")
    mu, bsq = _gram([list(c) for c in basis.columns], basis.exact)
    n = basis.n
    if basis.exact:
        half = mpq(1, 2)
        delta = params.delta
        eps = 0
    else:
        half = 0.5 + FLOAT_PREDICATE_TOL
        delta = float(params.delta)
        eps = FLOAT_PREDICATE_TOL
    for i in range(n):
        for j in range(i):
            if abs(mu[i][j]) > half:
                return False
    for i in range(n - 1):
        lhs = delta * bsq[i]
        rhs = bsq[i + 1] + mu[i + 1][i] ** 2 * bsq[i]
        if basis.exact:
            if lhs > rhs:
                return False
        elif float(lhs) > float(rhs) * (1 + eps) + eps:
            return False
    return True


def lll_reduce(basis: LatticeBasis, params: LllParams | None = None,
               max_iters: int | None = None):
    """LLL-reduce; returns (reduced basis, unimodular transform U).

    The reduced columns equal (old columns) * U with U an integer matrix of
    determinant +-1 (verified exactly in both modes).
    """
    if params is None:
        params = LllParams(mode="exact" if basis.exact else "float")
    exact = params.mode == "exact"
    if exact and not basis.exact:
        raise DomainError("exact reduction requested on a float basis")
    n = basis.n
    if n == 0:
        return basis, IntMatrix.identity(0)
    if max_iters is None:
        max_iters = 10000 * n * n
    b = [[rat(v) for v in c] if exact else [float(v) for v in c]
         for c in basis.columns]
    u = [[1 if i == j else 0 for i in range(n)] for j in range(n)]  # columns
    delta = params.delta if exact else float(params.delta)
    mu, bsq = _gram(b, exact)
    k = 1
    iters = 0
    while k < n:
        iters += 1
        if iters > max_iters:
            raise BudgetError(f"LLL did not terminate within {max_iters} sweeps")
        if not exact:
            mu, bsq = _gram(b, exact)  # kill float drift every sweep
        for j in range(k - 1, -1, -1):
            r = iround_half_up(mu[k][j])
            if r != 0:
                for t in range(len(b[k])):
                    b[k][t] = b[k][t] - r * b[j][t]
                for t in range(n):
                    u[k][t] -= r * u[j][t]
                mu[k][j] = mu[k][j] - r
                for i in range(j):
                    mu[k][i] = mu[k][i] - r * mu[j][i]
        if bsq[k] >= (delta - mu[k][k - 1] ** 2) * bsq[k - 1]:
            k += 1
        else:
            b[k], b[k - 1] = b[k - 1], b[k]
            u[k], u[k - 1] = u[k - 1], u[k]
            m = mu[k][k - 1]
            bk = bsq[k] + m * m * bsq[k - 1]
            if bk == 0:
                raise RankError("dependent columns during reduction")
            mu[k][k - 1] = m * bsq[k - 1] / bk
            bsq[k] = bsq[k - 1] * bsq[k] / bk
            bsq[k - 1] = bk
            for j in range(k - 1):
                mu[k][j], mu[k - 1][j] = mu[k - 1][j], mu[k][j]
            for i in range(k + 1, n):
                t = mu[i][k]
                mu[i][k] = mu[i][k - 1] - m * t
                mu[i][k - 1] = t + mu[k][k - 1] * mu[i][k]
            k = max(k - 1, 1)
    transform = IntMatrix(tuple(tuple(u[j][i] for j in range(n))
                                for i in range(n)))
    if not transform.is_unimodular():
        raise AssertionError("LLL transform is not unimodular")
    reduced = LatticeBasis(tuple(tuple(c) for c in b), exact)
    reduced = gram_schmidt(reduced)
    return reduced, transform


# ---------------------------------------------------------------------------
# the Lambda_t simultaneous approximation scheme
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LambdaT:
    """The lattice of M_t: identity block with last column (-alpha, t)."""

    alpha: tuple
    t: mpq
    basis: LatticeBasis

    @staticmethod
    def build(alpha: Sequence, t, exact: bool = True) -> "LambdaT":
        a = tuple(rat(v) for v in alpha)
        tq = rat(t)
        if not tq > 0:
            raise DomainError("t must be positive")
        d = len(a)
        cols = []
        for i in range(d):
            col = [mpq(0)] * (d + 1)
            col[i] = mpq(1)
            cols.append(col)
        cols.append([-v for v in a] + [tq])
        basis = lattice_basis(cols, exact=exact)
        return LambdaT(a, tq, basis)


@dataclass(frozen=True)
class LllApproximation:
    """A certified (p, q) read off a reduced Lambda_t basis vector."""

    t: mpq
    record: ApproximationRecord
    comp_bound: float  # 2^(d/4) t^(1/(d+1))
    q_bound: float     # 2^(d/4) t^(-d/(d+1))


def _check_comp_bound(value: mpq, d: int, t: mpq) -> bool:
    # |value| <= 2^(d/4) t^(1/(d+1))  <=>  value^(4(d+1)) <= 2^(d(d+1)) t^4
    return abs(value) ** (4 * (d + 1)) <= mpq(2) ** (d * (d + 1)) * t ** 4


def _check_q_bound(q: int, d: int, t: mpq) -> bool:
    # q <= 2^(d/4) t^(-d/(d+1))  <=>  q^(4(d+1)) <= 2^(d(d+1)) t^(-4d)
    return mpq(q) ** (4 * (d + 1)) <= mpq(2) ** (d * (d + 1)) * t ** (-4 * d)


def _check_first_vector_bound(norm_sq: mpq, d: int, t: mpq) -> bool:
    # ||b1||_2 <= 2^(d/4) |det|^(1/(d+1)) <=> (||b1||^2)^(d+1) <= 2^(d(d+1)/2) t^2
    return norm_sq ** (d + 1) <= mpq(2) ** (d * (d + 1) // 2) * t ** 2


def simultaneous_approx(alpha: Sequence, t, params: LllParams | None = None,
                        norm: str = "sup") -> LllApproximation:
    """One LLL pass on Lambda_t; returns a certified simultaneous approximation.

    Exact mode only: the postconditions are exact rational comparisons.
    """
    if params is None:
        params = LllParams()
    if params.mode != "exact":
        raise DomainError("simultaneous_approx requires exact mode")
    a = tuple(rat(v) for v in alpha)
    tq = rat(t)
    d = len(a)
    if not 0 < tq < 1:
        raise DomainError(f"t must lie in (0, 1), got {tq}")
    if any(not 0 <= v <= 1 for v in a):
        raise DomainError("alpha entries must lie in [0, 1]")
    lam = LambdaT.build(a, tq, exact=True)
    reduced, _ = lll_reduce(lam.basis, params)
    # invariant: first reduced vector within the 2^(d/4) det^(1/(d+1)) bound
    b1 = reduced.columns[0]
    if not _check_first_vector_bound(_dot(b1, b1), d, tq):
        raise AssertionError("first reduced vector violates the LLL norm bound")
    candidates = []
    for col in reduced.columns:
        qt = col[-1]
        q = qt / tq
        if q == 0:
            continue
        assert q.denominator == 1, "q*t not an integer multiple of t"
        candidates.append((_dot(col, col), abs(q), col, int(q)))
    if not candidates:
        raise DomainError("degenerate input: every reduced vector has q = 0")
    candidates.sort(key=lambda c: (c[0], c[1]))
    norm_sq, _, col, q = candidates[0]
    if q < 0:
        col = tuple(-v for v in col)
        q = -q
    ps = []
    for i in range(d):
        p = col[i] + q * a[i]
        assert p.denominator == 1, "non-integral numerator"
        ps.append(int(p))
    for i in range(d):
        if not _check_comp_bound(col[i], d, tq):
            raise DomainError(
                "degenerate input: certified component bound failed "
                f"(|p_{i} - q alpha_{i}| too large)")
    if not _check_q_bound(q, d, tq):
        raise DomainError("degenerate input: certified q bound failed")
    record = make_record(q, ps, a, norm)
    tf = float(tq)
    return LllApproximation(
        t=tq, record=record,
        comp_bound=2.0 ** (d / 4) * tf ** (1.0 / (d + 1)),
        q_bound=2.0 ** (d / 4) * tf ** (-d / (d + 1)))


def iterated_approx(alpha: Sequence, t0, ratio, steps: int,
                    params: LllParams | None = None,
                    norm: str = "sup") -> list:
    """Geometric schedule t_k = t0 * ratio^k; deduplicated, q-increasing."""
    if steps < 1:
        raise DomainError("steps must be >= 1")
    t0q = rat(t0)
    rq = rat(ratio)
    if not 0 < rq < 1:
        raise DomainError("ratio must lie in (0, 1)")
    out = []
    last_q = 0
    tk = t0q
    for _ in range(steps):
        approx = simultaneous_approx(alpha, tk, params, norm)
        if approx.record.q > last_q:
            out.append(approx)
            last_q = approx.record.q
        tk = tk * rq
    return out


def brute_force_shortest(basis: LatticeBasis, radius=None,
                         budget: int = 10 ** 7) -> tuple:
    """Exact shortest nonzero lattice vector by bounded coefficient enumeration.

    Only for lattices of dimension <= 4.  Coefficient bounds come from
    Cramer's rule (|u_i| <= ||row_i(B^-1)|| * radius); a float norm
    prescreen keeps the exact comparisons to a handful of candidates.
    """
    n = basis.n
    if n > 4:
        raise DomainError("brute_force_shortest supports dimension <= 4")
    if not basis.exact:
        raise DomainError("brute_force_shortest requires an exact basis")
    cols = [list(c) for c in basis.columns]
    amb = len(cols[0])
    if amb != n:
        raise DimensionError("enumeration needs a square (full-rank) basis")
    if radius is None:
        r2 = min(_dot(c, c) for c in cols)
    else:
        r2 = rat(radius) ** 2
    inv = _invert(cols, n)
    bounds = []
    for i in range(n):
        row2 = _dot(inv[i], inv[i])
        bounds.append(int(math.sqrt(float(r2) * float(row2))) + 1)
    count = 1
    for c in bounds:
        count *= 2 * c + 1
    if count > budget:
        raise BudgetError(f"enumeration of {count} points exceeds budget {budget}")
    colsf = [[float(v) for v in c] for c in cols]
    best_f = float(r2) * (1.0 + 1e-9)
    candidates = []
    for u in itertools.product(*(range(-c, c + 1) for c in bounds)):
        if all(v == 0 for v in u):
            continue
        first = next(v for v in u if v != 0)
        if first < 0:
            continue  # +-u give the same norm
        nf = 0.0
        for t in range(amb):
            s = 0.0
            for i in range(n):
                s += u[i] * colsf[i][t]
            nf += s * s
        if nf <= best_f * (1.0 + 1e-9):
            candidates.append(u)
            if nf < best_f:
                best_f = nf
    best_vec = None
    best_sq = None
    for u in sorted(candidates):
        vec = tuple(sum(u[i] * cols[i][t] for i in range(n)) for t in range(amb))
        sq = _dot(vec, vec)
        if sq == 0:
            continue
        if best_sq is None or sq < best_sq:
            best_sq = sq
            best_vec = vec
    if best_vec is None:
        raise AssertionError("no nonzero vector found inside the radius")
    return best_vec


def _invert(cols, n):
    """Exact inverse of the column matrix, returned as rows of B^-1."""
    a = [[cols[j][i] for j in range(n)] for i in range(n)]  # entries B[i][j]
    inv = [[mpq(1) if i == j else mpq(0) for j in range(n)] for i in range(n)]
    for col in range(n):
        piv = None
        for r in range(col, n):
            if a[r][col] != 0:
                piv = r
                break
        if piv is None:
            raise RankError("singular matrix")
        a[col], a[piv] = a[piv], a[col]
        inv[col], inv[piv] = inv[piv], inv[col]
        pval = a[col][col]
        a[col] = [v / pval for v in a[col]]
        inv[col] = [v / pval for v in inv[col]]
        for r in range(n):
            if r != col and a[r][col] != 0:
                f = a[r][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
                inv[r] = [x - f * y for x, y in zip(inv[r], inv[col])]
    return inv
