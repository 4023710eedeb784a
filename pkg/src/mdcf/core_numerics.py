"""Exact and high-precision arithmetic primitives shared by all modules.

Three layers:

* rationals (``gmpy2.mpq``) and floor/round helpers that work uniformly on
  exact and floating inputs,
* arbitrary-precision integer matrices (:class:`IntMatrix`),
* exact convex polygon geometry over the rationals
  (:class:`ConvexRationalPolygon` plus clipping / area / projective maps).

All values are immutable; every function here is pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence, Union

import gmpy2
from gmpy2 import mpfr, mpq

from .errors import DimensionError, PreconditionError, SingularityError

DEFAULT_PRECISION = 256

Rat = mpq
RatLike = Union[int, str, float, Fraction, mpq]
Point = tuple  # (mpq, mpq)

_HALF = mpq(1, 2)


# ---------------------------------------------------------------------------
# rationals and precision helpers
# ---------------------------------------------------------------------------

def rat(x: RatLike) -> mpq:
    """Convert to an exact rational.

    Floats convert to their exact binary value; strings accept "p/q" and
    decimal/scientific notation ("0.3", "1e-3").
    """
    if isinstance(x, mpq):
        return x
    if isinstance(x, (int, float)):
        return mpq(x)
    if isinstance(x, Fraction):
        return mpq(x.numerator, x.denominator)
    if isinstance(x, str):
        try:
            return mpq(x)
        except ValueError:
            return mpq(Fraction(x))
    if isinstance(x, mpfr):
        return mpq(x)
    raise TypeError(f"cannot interpret {x!r} as a rational")


def set_precision(bits: int) -> None:
    """Set the working binary precision of the current gmpy2 context."""
    if bits < 53:
        raise ValueError("precision must be at least 53 bits")
    gmpy2.get_context().precision = bits


def local_precision(bits: int):
    """Context manager running a block at the given binary precision."""
    if bits < 53:
        raise ValueError("precision must be at least 53 bits")
    ctx = gmpy2.get_context().copy()
    ctx.precision = bits
    return gmpy2.context(ctx)


def to_real(x, bits: int = DEFAULT_PRECISION) -> mpfr:
    """Round x to an mpfr with the given precision (nearest)."""
    with local_precision(bits):
        if isinstance(x, mpq):
            return mpfr(x)
        if isinstance(x, Fraction):
            return mpfr(mpq(x.numerator, x.denominator))
        if isinstance(x, str):
            return mpfr(rat(x))
        return mpfr(x)


def ifloor(x) -> int:
    """Exact floor as a Python int, for mpq/mpfr/Fraction/float/int."""
    if isinstance(x, mpfr):
        return int(gmpy2.floor(x))
    return math.floor(x)


def iround_half_up(x) -> int:
    """Nearest integer with the tie rule round(y) = floor(y + 1/2).

    Exact for rational inputs.  For floating inputs the addition rounds at
    working precision, which can only matter on a measure-zero set of ties.
    """
    if isinstance(x, (mpq, Fraction, int)):
        return math.floor(x + _HALF)
    if isinstance(x, mpfr):
        return int(gmpy2.floor(x + mpfr("0.5")))
    return math.floor(x + 0.5)


def is_exact(x) -> bool:
    """True for arithmetic types on which orbits can be computed exactly."""
    return isinstance(x, (int, Fraction, mpq))


# ---------------------------------------------------------------------------
# integer matrices
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IntMatrix:
    """Immutable matrix with arbitrary-precision integer entries."""

    rows: tuple

    def __post_init__(self):
        rows = tuple(tuple(int(v) for v in row) for row in self.rows)
        if rows and any(len(r) != len(rows[0]) for r in rows):
            raise DimensionError("ragged rows")
        object.__setattr__(self, "rows", rows)

    @property
    def dims(self) -> tuple:
        return (len(self.rows), len(self.rows[0]) if self.rows else 0)

    @staticmethod
    def identity(n: int) -> "IntMatrix":
        return IntMatrix(tuple(tuple(1 if i == j else 0 for j in range(n))
                               for i in range(n)))

    @staticmethod
    def zeros(n: int, m: int) -> "IntMatrix":
        return IntMatrix(tuple((0,) * m for _ in range(n)))

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[i][j]

    def column(self, j: int) -> tuple:
        return tuple(row[j] for row in self.rows)

    def transpose(self) -> "IntMatrix":
        n, m = self.dims
        return IntMatrix(tuple(tuple(self.rows[i][j] for i in range(n))
                               for j in range(m)))

    def __matmul__(self, other: "IntMatrix") -> "IntMatrix":
        return mat_mul(self, other)

    def apply(self, vec: Sequence) -> tuple:
        """Matrix-vector product; vector entries may be any numeric type."""
        n, m = self.dims
        if len(vec) != m:
            raise DimensionError(f"vector length {len(vec)} != {m}")
        return tuple(sum(self.rows[i][j] * vec[j] for j in range(m))
                     for i in range(n))

    def det(self) -> int:
        """Exact determinant via fraction-free (Bareiss) elimination."""
        n, m = self.dims
        if n != m:
            raise DimensionError("determinant of non-square matrix")
        if n == 0:
            return 1
        a = [list(row) for row in self.rows]
        sign = 1
        prev = 1
        for k in range(n - 1):
            if a[k][k] == 0:
                for i in range(k + 1, n):
                    if a[i][k] != 0:
                        a[k], a[i] = a[i], a[k]
                        sign = -sign
                        break
                else:
                    return 0
            for i in range(k + 1, n):
                for j in range(k + 1, n):
                    a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
            prev = a[k][k]
        return sign * a[n - 1][n - 1]

    def is_unimodular(self) -> bool:
        return abs(self.det()) == 1


def mat_mul(a: IntMatrix, b: IntMatrix) -> IntMatrix:
    """Exact product of integer matrices."""
    n, k = a.dims
    k2, m = b.dims
    if k != k2:
        raise DimensionError(f"inner dimensions {k} != {k2}")
    bt = b.transpose().rows
    return IntMatrix(tuple(
        tuple(sum(ra[t] * cb[t] for t in range(k)) for cb in bt)
        for ra in a.rows))


# ---------------------------------------------------------------------------
# exact convex polygons
# ---------------------------------------------------------------------------

def _cross(o: Point, a: Point, b: Point):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _convex_hull(points):
    """Andrew monotone chain; strictly convex hull (collinear points dropped)."""
    pts = sorted(set(points))
    if len(pts) < 3:
        return ()
    lower = []
    for p in pts:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper = []
    for p in reversed(pts):
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    hull = lower[:-1] + upper[:-1]
    return tuple(hull) if len(hull) >= 3 else ()


@dataclass(frozen=True)
class ConvexRationalPolygon:
    """Convex polygon with exact rational vertices, counterclockwise.

    The empty polygon is represented by an empty vertex tuple.  Open/closed
    boundary distinctions are deliberately not modelled: every comparison in
    this package is area-based.
    """

    vertices: tuple

    @property
    def is_empty(self) -> bool:
        return not self.vertices

    def __iter__(self):
        return iter(self.vertices)

    def contains(self, point) -> bool:
        """Closed-polygon membership test (boundary counts as inside)."""
        if self.is_empty:
            return False
        p = (rat(point[0]), rat(point[1]))
        v = self.vertices
        n = len(v)
        return all(_cross(v[i], v[(i + 1) % n], p) >= 0 for i in range(n))


EMPTY_POLYGON = ConvexRationalPolygon(())


def convex_polygon(points: Iterable) -> ConvexRationalPolygon:
    """Build a convex polygon from points (any order); degenerate input -> empty."""
    pts = [(rat(x), rat(y)) for x, y in points]
    return ConvexRationalPolygon(_convex_hull(pts))


def polygon_area(p: ConvexRationalPolygon) -> mpq:
    """Exact shoelace area (>= 0; empty polygon has area 0)."""
    v = p.vertices
    n = len(v)
    if n < 3:
        return mpq(0)
    s = mpq(0)
    for i in range(n):
        x0, y0 = v[i]
        x1, y1 = v[(i + 1) % n]
        s += x0 * y1 - x1 * y0
    return abs(s) / 2


def clip_halfplane(p: ConvexRationalPolygon, a: RatLike, b: RatLike,
                   c: RatLike) -> ConvexRationalPolygon:
    """Clip to the closed half-plane a*x + b*y <= c (exact)."""
    if p.is_empty:
        return EMPTY_POLYGON
    a, b, c = rat(a), rat(b), rat(c)
    verts = p.vertices
    out = []
    n = len(verts)
    for i in range(n):
        s = verts[i]
        e = verts[(i + 1) % n]
        fs = a * s[0] + b * s[1] - c
        fe = a * e[0] + b * e[1] - c
        if fs <= 0:
            out.append(s)
        if (fs < 0 < fe) or (fe < 0 < fs):
            t = fs / (fs - fe)
            out.append((s[0] + t * (e[0] - s[0]), s[1] + t * (e[1] - s[1])))
    # drop duplicates and collinear chains introduced by the cut
    dedup = []
    for q in out:
        if not dedup or q != dedup[-1]:
            dedup.append(q)
    if len(dedup) >= 2 and dedup[0] == dedup[-1]:
        dedup.pop()
    if len(dedup) < 3:
        return EMPTY_POLYGON
    pruned = []
    m = len(dedup)
    for i in range(m):
        if _cross(dedup[i - 1], dedup[i], dedup[(i + 1) % m]) != 0:
            pruned.append(dedup[i])
    if len(pruned) < 3:
        return EMPTY_POLYGON
    poly = ConvexRationalPolygon(tuple(pruned))
    return poly if polygon_area(poly) > 0 else EMPTY_POLYGON


def polygon_clip(a: ConvexRationalPolygon,
                 b: ConvexRationalPolygon) -> ConvexRationalPolygon:
    """Exact intersection of two convex polygons (successive half-plane cuts)."""
    if a.is_empty or b.is_empty:
        return EMPTY_POLYGON
    res = a
    v = b.vertices
    n = len(v)
    for i in range(n):
        p0 = v[i]
        p1 = v[(i + 1) % n]
        # interior of b lies left of the directed edge p0 -> p1,
        # i.e. (p1y - p0y) x + (p0x - p1x) y <= same expression at p0
        ca = p1[1] - p0[1]
        cb = p0[0] - p1[0]
        cc = ca * p0[0] + cb * p0[1]
        res = clip_halfplane(res, ca, cb, cc)
        if res.is_empty:
            return EMPTY_POLYGON
    return res


def _check_interior_disjoint(polys, which: str):
    ps = list(polys)
    for i in range(len(ps)):
        for j in range(i + 1, len(ps)):
            if polygon_area(polygon_clip(ps[i], ps[j])) != 0:
                raise PreconditionError(
                    f"polygons {i} and {j} of {which} list overlap with "
                    f"positive area")


def union_symm_diff_area(u, v) -> mpq:
    """Exact area of the symmetric difference of two unions of polygons.

    Both lists must be pairwise interior-disjoint (checked).  Computed as
    area(u) + area(v) - 2 * sum of pairwise intersection areas.
    """
    u = list(u)
    v = list(v)
    _check_interior_disjoint(u, "first")
    _check_interior_disjoint(v, "second")
    total = sum((polygon_area(p) for p in u), mpq(0))
    total += sum((polygon_area(p) for p in v), mpq(0))
    inter = mpq(0)
    for p in u:
        for q in v:
            inter += polygon_area(polygon_clip(p, q))
    return total - 2 * inter


def polygons_equal_area(a: ConvexRationalPolygon,
                        b: ConvexRationalPolygon) -> bool:
    """Set equality up to measure zero."""
    return union_symm_diff_area([a], [b]) == 0


def projective_image(p: ConvexRationalPolygon, a: int,
                     b: int) -> ConvexRationalPolygon:
    """Exact image of p under (x1, x2) -> (x2/x1 - b, 1/x1 - a).

    In homogeneous coordinates (x1 : x2 : 1) -> (x2 - b*x1 : 1 - a*x1 : x1),
    so vertices map to vertices and convexity is preserved as long as the
    polygon stays strictly on one side of the singular line x1 = 0.
    """
    if p.is_empty:
        return EMPTY_POLYGON
    signs = {1 if v[0] > 0 else (-1 if v[0] < 0 else 0) for v in p.vertices}
    if 0 in signs or len(signs) > 1:
        raise SingularityError("polygon touches or crosses the line x1 = 0")
    mapped = []
    for x1, x2 in p.vertices:
        mapped.append((x2 / x1 - b, 1 / x1 - a))
    return ConvexRationalPolygon(_convex_hull(mapped))


def inverse_projective_image(p: ConvexRationalPolygon, a: int,
                             b: int) -> ConvexRationalPolygon:
    """Exact preimage under the map of :func:`projective_image`.

    Applies (y1, y2) -> (1/(y2 + a), (y1 + b)/(y2 + a)).
    """
    if p.is_empty:
        return EMPTY_POLYGON
    signs = set()
    for _, y2 in p.vertices:
        t = y2 + a
        signs.add(1 if t > 0 else (-1 if t < 0 else 0))
    if 0 in signs or len(signs) > 1:
        raise SingularityError("image polygon touches the singular line y2 = -a")
    mapped = []
    for y1, y2 in p.vertices:
        x1 = 1 / mpq(y2 + a)
        mapped.append((x1, x1 * (y1 + b)))
    return ConvexRationalPolygon(_convex_hull(mapped))


def reflect_polygon(p: ConvexRationalPolygon, sx: int,
                    sy: int) -> ConvexRationalPolygon:
    """Reflect through the axes: (x, y) -> (sx*x, sy*y) with sx, sy in {1, -1}."""
    if p.is_empty:
        return EMPTY_POLYGON
    return ConvexRationalPolygon(
        _convex_hull([(sx * x, sy * y) for x, y in p.vertices]))
