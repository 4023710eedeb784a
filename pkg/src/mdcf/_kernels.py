"""Double-precision orbit kernels (numba-jitted when available).

Each Lyapunov kernel follows one orbit, pushing a 2-frame through the
transposed partial-quotient matrices (the singular values of A(1)...A(n)
equal those of the reversed transposed product).  The second frame vector
is projected off the first after every step; this leaves the wedge
v1 ^ v2, and hence the accumulated volume growth, unchanged while keeping
the strongly contracting direction representable in doubles.

Returns are (sum_log_r1, sum_log_r1r2, lognorm_hist) with NaN sums
signalling a degenerate orbit (exact zero hit / overflow); the caller
resamples.
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn
        if args and callable(args[0]):
            return args[0]
        return wrap

LOGNORM_BINS = 64

RULE_BRUN = 0
RULE_SELMER = 1
RULE_POINCARE = 2
RULE_FULLSUB = 3

_jit = njit(cache=True, nogil=True, fastmath=False)


@_jit
def _renorm(v1, v2):
    m = v1.shape[0]
    r1 = 0.0
    for j in range(m):
        r1 += v1[j] * v1[j]
    r1 = np.sqrt(r1)
    if r1 == 0.0 or not np.isfinite(r1):
        return -1.0, -1.0
    for j in range(m):
        v1[j] /= r1
    r2 = 0.0
    for j in range(m):
        r2 += v2[j] * v2[j]
    r2 = np.sqrt(r2)
    if r2 == 0.0 or not np.isfinite(r2):
        return -1.0, -1.0
    for j in range(m):
        v2[j] /= r2
    return r1, r2


@_jit
def _project_off(v1, v2):
    # v2 -= (<v2,v1>/<v1,v1>) v1 ; leaves v1 ^ v2 unchanged
    m = v1.shape[0]
    n1 = 0.0
    pr = 0.0
    for j in range(m):
        n1 += v1[j] * v1[j]
        pr += v1[j] * v2[j]
    if n1 == 0.0 or not np.isfinite(n1) or not np.isfinite(pr):
        return False
    c = pr / n1
    for j in range(m):
        v2[j] -= c * v1[j]
    return True


@_jit
def _hist_add(hist, norm_bound):
    if norm_bound < 1.0:
        norm_bound = 1.0
    b = int(np.log(norm_bound))
    if b < 0:
        b = 0
    if b >= LOGNORM_BINS:
        b = LOGNORM_BINS - 1
    hist[b] += 1


@_jit
def lyap_pq(x0, n, k, burn, rounded):
    """Gauss / nearest-integer Gauss / Jacobi-Perron / NIJP Lyapunov run.

    rounded=False: digits floor (Gauss, JPA); True: floor(y+1/2) (NIG, NIJP).
    """
    d = x0.shape[0]
    m = d + 1
    x = x0.copy()
    db = np.zeros(d)
    v1 = np.zeros(m)
    v2 = np.zeros(m)
    v1[0] = 1.0
    v2[1] = 1.0
    w1 = np.zeros(m)
    w2 = np.zeros(m)
    hist = np.zeros(LOGNORM_BINS, dtype=np.int64)
    s1 = 0.0
    s12 = 0.0
    nan = np.nan
    for phase in range(2):
        limit = burn if phase == 0 else n
        since = 0
        for step in range(limit):
            if x[0] == 0.0 or not np.isfinite(x[0]):
                return nan, nan, hist
            inv = 1.0 / x[0]
            if not np.isfinite(inv):
                return nan, nan, hist
            if rounded:
                a = np.floor(inv + 0.5)
            else:
                a = np.floor(inv)
            db[d - 1] = a
            norm_bound = 1.0 + np.abs(a)
            for j in range(1, d):
                r = x[j] * inv
                if rounded:
                    b = np.floor(r + 0.5)
                else:
                    b = np.floor(r)
                db[j - 1] = b
                x[j - 1] = r - b
                if 1.0 + np.abs(b) > norm_bound:
                    norm_bound = 1.0 + np.abs(b)
            x[d - 1] = inv - a
            if phase == 1:
                _hist_add(hist, norm_bound)
            # w = A^T v: shift plus one inner product
            acc1 = v1[0]
            acc2 = v2[0]
            for j in range(1, d):
                acc1 += db[j - 1] * v1[j]
                acc2 += db[j - 1] * v2[j]
            acc1 += a * v1[d]
            acc2 += a * v2[d]
            for j in range(m - 1):
                w1[j] = v1[j + 1]
                w2[j] = v2[j + 1]
            w1[m - 1] = acc1
            w2[m - 1] = acc2
            v1, w1 = w1, v1
            v2, w2 = w2, v2
            if not _project_off(v1, v2):
                return nan, nan, hist
            since += 1
            if since == k or step == limit - 1:
                r1, r2 = _renorm(v1, v2)
                if r1 < 0.0:
                    return nan, nan, hist
                if phase == 1:
                    s1 += np.log(r1)
                    s12 += np.log(r1) + np.log(r2)
                since = 0
    return s1, s12, hist


@_jit
def lyap_farey(x0, n, k, burn):
    x = x0
    v1 = np.zeros(2)
    v2 = np.zeros(2)
    v1[0] = 1.0
    v2[1] = 1.0
    hist = np.zeros(LOGNORM_BINS, dtype=np.int64)
    s1 = 0.0
    s12 = 0.0
    for phase in range(2):
        limit = burn if phase == 0 else n
        since = 0
        for step in range(limit):
            if not np.isfinite(x):
                return np.nan, np.nan, hist
            if x <= 0.5:
                x = x / (1.0 - x)
                # A = [[1,0],[1,1]]; A^T v = (v0+v1, v1)
                v1[0] = v1[0] + v1[1]
                v2[0] = v2[0] + v2[1]
            else:
                x = (1.0 - x) / x
                # A = [[0,1],[1,1]]; A^T v = (v1, v0+v1)
                t1 = v1[0]
                v1[0] = v1[1]
                v1[1] = t1 + v1[1]
                t2 = v2[0]
                v2[0] = v2[1]
                v2[1] = t2 + v2[1]
            if phase == 1:
                _hist_add(hist, 2.0)
            if not _project_off(v1, v2):
                return np.nan, np.nan, hist
            since += 1
            if since == k or step == limit - 1:
                r1, r2 = _renorm(v1, v2)
                if r1 < 0.0:
                    return np.nan, np.nan, hist
                if phase == 1:
                    s1 += np.log(r1)
                    s12 += np.log(r1) + np.log(r2)
                since = 0
    return s1, s12, hist


@_jit
def lyap_subtractive(x0, n, k, burn, rule):
    """Brun / Selmer / Poincare / fully subtractive in tuple coordinates.

    State u = (1, x_1 >= ... >= x_d); frame pushed through B^T = P S^-T,
    which has the same singular-value growth as the homogeneous-last form
    (conjugate by a fixed rotation).
    """
    d = x0.shape[0]
    m = d + 1
    u = np.empty(m)
    u[0] = 1.0
    for j in range(d):
        u[j + 1] = x0[j]
    z = np.empty(m)
    perm = np.empty(m, dtype=np.int64)
    v1 = np.zeros(m)
    v2 = np.zeros(m)
    v1[0] = 1.0
    v2[1] = 1.0
    t1 = np.empty(m)
    t2 = np.empty(m)
    w1 = np.empty(m)
    w2 = np.empty(m)
    hist = np.zeros(LOGNORM_BINS, dtype=np.int64)
    s1 = 0.0
    s12 = 0.0
    last = m - 1
    for phase in range(2):
        limit = burn if phase == 0 else n
        since = 0
        for step in range(limit):
            for j in range(m):
                z[j] = u[j]
            if rule == RULE_BRUN:
                z[0] = u[0] - u[1]
            elif rule == RULE_SELMER:
                z[0] = u[0] - u[last]
            elif rule == RULE_POINCARE:
                for j in range(last):
                    z[j] = u[j] - u[j + 1]
            else:
                for j in range(last):
                    z[j] = u[j] - u[last]
            for j in range(m):
                if z[j] <= 0.0 or not np.isfinite(z[j]):
                    return np.nan, np.nan, hist
            # stable insertion sort, descending
            for j in range(m):
                perm[j] = j
            for j in range(1, m):
                key = perm[j]
                kz = z[key]
                i = j - 1
                while i >= 0 and z[perm[i]] < kz:
                    perm[i + 1] = perm[i]
                    i -= 1
                perm[i + 1] = key
            theta = z[perm[0]]
            for j in range(m):
                u[j] = z[perm[j]] / theta
            # frame update: t = S^-T v, then w = P t
            for j in range(m):
                t1[j] = v1[j]
                t2[j] = v2[j]
            if rule == RULE_BRUN:
                t1[1] += v1[0]
                t2[1] += v2[0]
            elif rule == RULE_SELMER:
                t1[last] += v1[0]
                t2[last] += v2[0]
            elif rule == RULE_POINCARE:
                for j in range(1, m):
                    t1[j] = t1[j - 1] + v1[j]
                    t2[j] = t2[j - 1] + v2[j]
            else:
                acc1 = 0.0
                acc2 = 0.0
                for j in range(m):
                    acc1 += v1[j]
                    acc2 += v2[j]
                t1[last] = acc1
                t2[last] = acc2
            for j in range(m):
                w1[j] = t1[perm[j]]
                w2[j] = t2[perm[j]]
            v1, w1 = w1, v1
            v2, w2 = w2, v2
            if phase == 1:
                _hist_add(hist, float(m))
            if not _project_off(v1, v2):
                return np.nan, np.nan, hist
            since += 1
            if since == k or step == limit - 1:
                r1, r2 = _renorm(v1, v2)
                if r1 < 0.0:
                    return np.nan, np.nan, hist
                if phase == 1:
                    s1 += np.log(r1)
                    s12 += np.log(r1) + np.log(r2)
                since = 0
    return s1, s12, hist


# ---------------------------------------------------------------------------
# Gauss-map statistics kernels
# ---------------------------------------------------------------------------

@_jit
def gauss_digits(x0, n):
    """Digit stream a_1..a_n of the Gauss orbit; returns (digits, count)."""
    digs = np.zeros(n, dtype=np.int64)
    x = x0
    for i in range(n):
        if x <= 0.0 or x > 1.0 or not np.isfinite(x):
            return digs, i
        inv = 1.0 / x
        if not np.isfinite(inv) or inv >= 9.007199254740992e15:
            return digs, i
        a = np.floor(inv)
        digs[i] = np.int64(a)
        x = inv - a
    return digs, n


@_jit
def gauss_theta_run(x0, n):
    """Digits and approximation coefficients Theta_0..Theta_n.

    Uses the locally stable recurrences r_{j+1} = 1/(a_{j+1} + r_j) and
    Theta_{j+1} = Theta_j * x_{j+1} * (a_{j+1} + r_j); relative error grows
    only linearly in j.
    """
    digs = np.zeros(n, dtype=np.int64)
    theta = np.zeros(n + 1)
    logq = np.zeros(n + 1)
    x = x0
    theta[0] = x0
    r = 0.0
    lq = 0.0
    for i in range(n):
        if x <= 0.0 or x > 1.0 or not np.isfinite(x):
            return digs, theta, logq, i
        inv = 1.0 / x
        if not np.isfinite(inv) or inv >= 9.007199254740992e15:
            return digs, theta, logq, i
        a = np.floor(inv)
        digs[i] = np.int64(a)
        x = inv - a
        denom = a + r
        theta[i + 1] = theta[i] * x * denom
        lq += np.log(denom)
        logq[i + 1] = lq
        r = 1.0 / denom
    return digs, theta, logq, n


@_jit
def gauss_occupancy(x0, n, bins):
    hist = np.zeros(bins, dtype=np.int64)
    x = x0
    for i in range(n):
        if x <= 0.0 or x > 1.0 or not np.isfinite(x):
            return hist, i
        b = int(x * bins)
        if b >= bins:
            b = bins - 1
        hist[b] += 1
        inv = 1.0 / x
        x = inv - np.floor(inv)
    return hist, n


@_jit
def plane_occupancy(x0, n, bins, rounded, lo):
    """2-D occupancy histogram for JPA (lo=0) / NIJP (lo=-1/2), d=2."""
    hist = np.zeros((bins, bins), dtype=np.int64)
    x1 = x0[0]
    x2 = x0[1]
    for i in range(n):
        if x1 == 0.0 or not np.isfinite(x1) or not np.isfinite(x2):
            return hist, i
        b1 = int((x1 - lo) * bins)
        b2 = int((x2 - lo) * bins)
        if b1 >= bins:
            b1 = bins - 1
        if b2 >= bins:
            b2 = bins - 1
        if b1 < 0:
            b1 = 0
        if b2 < 0:
            b2 = 0
        hist[b1, b2] += 1
        inv = 1.0 / x1
        if not np.isfinite(inv):
            return hist, i
        r = x2 * inv
        if rounded:
            b = np.floor(r + 0.5)
            a = np.floor(inv + 0.5)
        else:
            b = np.floor(r)
            a = np.floor(inv)
        x1 = r - b
        x2 = inv - a
    return hist, n


@_jit
def nijp_digit_run(x0, n):
    """NIJP d=2 digit stream with pre-step quadrant-1 flags.

    Returns (a_digits, b_digits, in_q1, count); in_q1[i] is True when the
    point producing digit i satisfies x1 > 0 and x2 >= 0.
    """
    adig = np.zeros(n, dtype=np.int64)
    bdig = np.zeros(n, dtype=np.int64)
    q1 = np.zeros(n, dtype=np.bool_)
    x1 = x0[0]
    x2 = x0[1]
    for i in range(n):
        if x1 == 0.0 or not np.isfinite(x1) or not np.isfinite(x2):
            return adig, bdig, q1, i
        inv = 1.0 / x1
        if not np.isfinite(inv) or np.abs(inv) >= 9.007199254740992e15:
            return adig, bdig, q1, i
        q1[i] = (x1 > 0.0) and (x2 >= 0.0)
        a = np.floor(inv + 0.5)
        r = x2 * inv
        b = np.floor(r + 0.5)
        adig[i] = np.int64(a)
        bdig[i] = np.int64(b)
        x1 = r - b
        x2 = inv - a
    return adig, bdig, q1, n
