"""Continued fraction maps as a uniform step interface.

Every algorithm produces, from a state x in its domain, one
:class:`CfStep` holding the digit vector, the integer partial-quotient
matrix A, the renormalizer theta and the next state, tied together by the
cocycle identity

    [x; 1] = theta * A * [T(x); 1]

with the homogeneous coordinate last.  Steps work unchanged on exact
rationals (``mpq``/``Fraction``), on ``gmpy2.mpfr`` at the current context
precision, and on hardware floats.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Sequence

from gmpy2 import mpfr, mpq

from .core_numerics import (DEFAULT_PRECISION, IntMatrix, ifloor,
                            iround_half_up, is_exact, local_precision)
from .errors import DomainError, OrbitHalt


class Family(str, enum.Enum):
    GAUSS = "gauss"
    NEAREST_INT_GAUSS = "nig"
    FAREY = "farey"
    JACOBI_PERRON = "jp"
    NIJP = "nijp"
    BRUN = "brun"
    SELMER = "selmer"
    POINCARE = "poincare"
    FULLY_SUBTRACTIVE = "fullsub"


ONE_DIMENSIONAL = {Family.GAUSS, Family.NEAREST_INT_GAUSS, Family.FAREY}
SUBTRACTIVE = {Family.BRUN, Family.SELMER, Family.POINCARE,
               Family.FULLY_SUBTRACTIVE}


@dataclass(frozen=True)
class AlgorithmId:
    """An algorithm family together with its state dimension d."""

    family: Family
    d: int = 1

    def __post_init__(self):
        if self.family in ONE_DIMENSIONAL:
            if self.d != 1:
                raise DomainError(f"{self.family.value} is one-dimensional")
        elif self.d < 2:
            raise DomainError(
                f"{self.family.value} needs dimension d >= 2, got {self.d}")

    @property
    def matrix_size(self) -> int:
        return self.d + 1

    def __str__(self):
        return f"{self.family.value}(d={self.d})"


def parse_algorithm(name: str, d: int | None = None) -> AlgorithmId:
    fam = Family(name.lower())
    if d is None:
        d = 1 if fam in ONE_DIMENSIONAL else 2
    return AlgorithmId(fam, d)


@dataclass(frozen=True)
class CfStep:
    """One application of a CF map: digits, matrix, renormalizer, next state."""

    digits: tuple
    matrix: IntMatrix
    theta: object
    next_state: tuple


@dataclass
class OrbitRecord:
    """A finite orbit: consecutive steps of one algorithm from one start."""

    algorithm: AlgorithmId
    start: tuple
    steps: list = field(default_factory=list)
    halted_at: int | None = None
    halt_reason: str | None = None

    @property
    def length(self) -> int:
        return len(self.steps)

    def digit_sequence(self) -> list:
        return [s.digits for s in self.steps]


# ---------------------------------------------------------------------------
# companion matrix shared by Gauss / Jacobi-Perron style maps
# ---------------------------------------------------------------------------

def _companion_matrix(bs: Sequence[int], a: int) -> IntMatrix:
    """Partial-quotient matrix for digit vector (b_2..b_d, a), size d+1.

    Rows solve [x; 1] = x1 * A * [T(x); 1]:
    row 0 picks the homogeneous 1, row i recovers x_{i+1} = x1*(y_i + b_{i+1}),
    the last row recovers 1 = x1*(y_d + a).
    """
    d = len(bs) + 1
    m = d + 1
    rows = [[0] * m for _ in range(m)]
    rows[0][m - 1] = 1
    for i in range(1, d):
        rows[i][i - 1] = 1
        rows[i][m - 1] = bs[i - 1]
    rows[d][d - 1] = 1
    rows[d][m - 1] = a
    return IntMatrix(tuple(tuple(r) for r in rows))


def _as_state(x) -> tuple:
    if isinstance(x, (tuple, list)):
        return tuple(x)
    return (x,)


# ---------------------------------------------------------------------------
# one-dimensional maps
# ---------------------------------------------------------------------------

def gauss_step(x) -> CfStep:
    """Gauss map x -> {1/x} on (0, 1]; digit a = floor(1/x) >= 1."""
    (x,) = _as_state(x)
    if x == 0:
        raise OrbitHalt("rational endpoint reached")
    if not 0 < x <= 1:
        raise DomainError(f"gauss_step needs x in (0, 1], got {x}")
    inv = 1 / x
    a = ifloor(inv)
    nxt = inv - a
    return CfStep((a,), _companion_matrix((), a), x, (nxt,))


def nearest_integer_gauss_step(x) -> CfStep:
    """Nearest-integer map x -> 1/x - round(1/x) on [-1/2, 1/2]; |digit| >= 2."""
    (x,) = _as_state(x)
    if x == 0:
        raise OrbitHalt("rational endpoint reached")
    half = mpq(1, 2) if is_exact(x) else 0.5
    if not -half <= x <= half:
        raise DomainError(f"nearest_integer_gauss_step needs |x| <= 1/2, got {x}")
    inv = 1 / x
    n = iround_half_up(inv)
    nxt = inv - n
    return CfStep((n,), _companion_matrix((), n), x, (nxt,))


def farey_step(x) -> CfStep:
    """Farey map on [0, 1]; digit identifies the branch (0 below 1/2)."""
    (x,) = _as_state(x)
    half = mpq(1, 2) if is_exact(x) else 0.5
    if not 0 <= x <= 1:
        raise DomainError(f"farey_step needs x in [0, 1], got {x}")
    if x <= half:
        # [x;1] = (1-x) * [[1,0],[1,1]] * [x/(1-x); 1]
        return CfStep((0,), IntMatrix(((1, 0), (1, 1))), 1 - x, (x / (1 - x),))
    return CfStep((1,), IntMatrix(((0, 1), (1, 1))), x, ((1 - x) / x,))


# ---------------------------------------------------------------------------
# Jacobi-Perron and its nearest-integer version
# ---------------------------------------------------------------------------

def jacobi_perron_step(x) -> CfStep:
    """Projective Jacobi-Perron step on [0, 1]^d.

    (x1,..,xd) -> ({x2/x1},..,{xd/x1},{1/x1}); digits b_i = floor(x_i/x1)
    for 2 <= i <= d and a = floor(1/x1), satisfying 0 <= b_i <= a.
    """
    x = _as_state(x)
    if x[0] == 0:
        raise OrbitHalt("first coordinate vanished")
    if any(not 0 <= xi <= 1 for xi in x):
        raise DomainError("jacobi_perron_step needs x in [0, 1]^d")
    inv = 1 / x[0]
    a = ifloor(inv)
    bs = []
    nxt = []
    for xi in x[1:]:
        r = xi * inv
        b = ifloor(r)
        bs.append(b)
        nxt.append(r - b)
    nxt.append(inv - a)
    return CfStep(tuple(bs) + (a,), _companion_matrix(bs, a), x[0], tuple(nxt))


def nijp_step(x) -> CfStep:
    """Nearest-integer Jacobi-Perron step on C = [-1/2, 1/2]^d.

    Digits a = round(1/x1) with |a| >= 2 and b_i = round(x_i/x1) with
    |b_i| <= ceil(|a|/2); all rounding is floor(y + 1/2).
    """
    x = _as_state(x)
    if x[0] == 0:
        raise OrbitHalt("first coordinate vanished")
    half = mpq(1, 2) if is_exact(x[0]) else 0.5
    if any(not -half <= xi <= half for xi in x):
        raise DomainError("nijp_step needs x in [-1/2, 1/2]^d")
    inv = 1 / x[0]
    a = iround_half_up(inv)
    bs = []
    nxt = []
    for xi in x[1:]:
        r = xi * inv
        b = iround_half_up(r)
        bs.append(b)
        nxt.append(r - b)
    nxt.append(inv - a)
    return CfStep(tuple(bs) + (a,), _companion_matrix(bs, a), x[0], tuple(nxt))


# ---------------------------------------------------------------------------
# sorted subtractive algorithms (Brun, Selmer, Poincare, fully subtractive)
# ---------------------------------------------------------------------------

def _subtract(rule: Family, u: list) -> list:
    """One subtraction pass on the descending tuple u = (u_0 >= ... >= u_d)."""
    z = list(u)
    last = len(u) - 1
    if rule is Family.BRUN:
        z[0] = u[0] - u[1]
    elif rule is Family.SELMER:
        z[0] = u[0] - u[last]
    elif rule is Family.POINCARE:
        for i in range(last):
            z[i] = u[i] - u[i + 1]
    elif rule is Family.FULLY_SUBTRACTIVE:
        for i in range(last):
            z[i] = u[i] - u[last]
    else:
        raise DomainError(f"{rule} is not a subtractive rule")
    return z


def _subtractive_matrix(rule: Family, perm: tuple, d: int) -> IntMatrix:
    """Partial-quotient matrix in [x;1]-last coordinates for one pass.

    In tuple coordinates (largest entry first) the step is u = S u_sub,
    sorting is a permutation P, so u = (S^-1 P^T) u'.  Conjugating by the
    rotation that moves the leading entry to the homogeneous slot gives A.
    """
    m = d + 1
    last = m - 1
    sinv = [[1 if i == j else 0 for j in range(m)] for i in range(m)]
    if rule is Family.BRUN:
        sinv[0][1] = 1
    elif rule is Family.SELMER:
        sinv[0][last] = 1
    elif rule is Family.POINCARE:
        for i in range(m):
            for j in range(i + 1, m):
                sinv[i][j] = 1
    elif rule is Family.FULLY_SUBTRACTIVE:
        for i in range(last):
            sinv[i][last] = 1
    # B = S^-1 P^T, i.e. column k of B is column perm[k] of S^-1
    b = [[sinv[i][perm[k]] for k in range(m)] for i in range(m)]
    # conjugate by the rotation that sends tuple slot 0 to the homogeneous
    # slot: A[i][j] = B[(i+1) mod m][(j+1) mod m]
    rows = [[b[(i + 1) % m][(j + 1) % m] for j in range(m)] for i in range(m)]
    return IntMatrix(tuple(tuple(r) for r in rows))


def sorted_subtractive_step(x, rule: Family) -> CfStep:
    """One subtract-sort-renormalize pass of a space-ordering algorithm.

    The state x = (x_1 >= ... >= x_d) lists the entries of the working
    tuple (1, x_1, ..., x_d) past the leading 1; after the subtraction the
    tuple is re-sorted (the permutation is the digit) and divided by its
    largest entry, which is theta.
    """
    x = _as_state(x)
    if any(xi <= 0 for xi in x):
        raise OrbitHalt("zero entry: rational dependence")
    if any(xi > 1 for xi in x):
        raise DomainError("subtractive state entries must lie in (0, 1]")
    if any(x[i] < x[i + 1] for i in range(len(x) - 1)):
        raise DomainError("subtractive state must be sorted descending")
    one = mpq(1) if is_exact(x[0]) else 1.0
    u = [one] + list(x)
    z = _subtract(rule, u)
    if any(zi == 0 for zi in z):
        raise OrbitHalt("zero entry after subtraction: rational dependence")
    order = sorted(range(len(z)), key=lambda i: z[i], reverse=True)
    theta = z[order[0]]
    nxt = tuple(z[order[k]] / theta for k in range(1, len(z)))
    mat = _subtractive_matrix(rule, tuple(order), len(x))
    return CfStep(tuple(order), mat, theta, nxt)


# ---------------------------------------------------------------------------
# dispatch, orbit expansion, cocycle verification
# ---------------------------------------------------------------------------

def step_fn(alg: AlgorithmId) -> Callable[[tuple], CfStep]:
    fam = alg.family
    if fam is Family.GAUSS:
        return gauss_step
    if fam is Family.NEAREST_INT_GAUSS:
        return nearest_integer_gauss_step
    if fam is Family.FAREY:
        return farey_step
    if fam is Family.JACOBI_PERRON:
        return jacobi_perron_step
    if fam is Family.NIJP:
        return nijp_step
    return lambda x: sorted_subtractive_step(x, fam)


def random_start(alg: AlgorithmId, rng) -> tuple:
    """Uniform random point of the algorithm's domain (as floats)."""
    fam, d = alg.family, alg.d
    if fam in (Family.GAUSS, Family.FAREY):
        return (rng.uniform(0.0, 1.0),)
    if fam is Family.NEAREST_INT_GAUSS:
        return (rng.uniform(-0.5, 0.5),)
    if fam is Family.JACOBI_PERRON:
        return tuple(rng.uniform(0.0, 1.0, d))
    if fam is Family.NIJP:
        return tuple(rng.uniform(-0.5, 0.5, d))
    return tuple(sorted(rng.uniform(0.0, 1.0, d), reverse=True))


def cocycle_residual(state: tuple, step: CfStep):
    """sup-norm of [x;1] - theta * A * [T(x);1] in the state's arithmetic."""
    one = mpq(1) if is_exact(state[0]) else (
        mpfr(1) if isinstance(state[0], mpfr) else 1.0)
    rhs = step.matrix.apply(tuple(step.next_state) + (one,))
    lhs = tuple(state) + (one,)
    return max(abs(l - step.theta * r) for l, r in zip(lhs, rhs))


def expand(alg: AlgorithmId, x, n: int, precision: int = DEFAULT_PRECISION,
           verify: bool = True) -> OrbitRecord:
    """Run n steps (or fewer on halt), re-verifying the cocycle identity.

    Exact states verify to residual exactly 0; floating states to
    2^(-precision/2) where precision is the state's working precision.
    """
    x = _as_state(x)
    fn = step_fn(alg)
    record = OrbitRecord(alg, x)
    has_mpfr = any(isinstance(v, mpfr) for v in x)
    if has_mpfr:
        ctx = local_precision(precision)
    else:
        ctx = None
    if isinstance(x[0], float):
        precision = 53
    tol = mpfr(2) ** (-(precision // 2)) if has_mpfr else 2.0 ** (-(precision // 2))

    def run():
        state = x
        for i in range(n):
            try:
                step = fn(state)
            except OrbitHalt as halt:
                record.halted_at = i
                record.halt_reason = halt.reason
                return
            if verify:
                res = cocycle_residual(state, step)
                if is_exact(state[0]):
                    if res != 0:
                        raise AssertionError(
                            f"exact cocycle identity violated at step {i}: {res}")
                elif res >= tol:
                    raise AssertionError(
                        f"cocycle residual {res} >= {tol} at step {i}")
            if abs(step.matrix.det()) != 1:
                raise AssertionError(f"non-unimodular matrix at step {i}")
            record.steps.append(step)
            state = step.next_state

    if ctx is not None:
        with ctx:
            run()
    else:
        run()
    return record
