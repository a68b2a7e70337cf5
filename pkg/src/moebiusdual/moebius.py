"""Fractional-linear maps on the extended line, in matrix form.

A matrix (a, b; c, d) with rational entries acts as

    x  |->  (c + d*x) / (a + b*x).

This entry layout puts the denominator coefficients in the top row, so the
coefficients read off directly against the convention used throughout the
rest of the package (branch matrices, their inverses, and transposes).  Under
it, composition of maps is the plain matrix product, the inverse map is
(d, -b; -c, a), and transposing swaps the roles of numerator and denominator
off-diagonal entries.

Matrices are kept raw: scaling changes nothing about the map, but the
determinant carries meaning for the systems built downstream, so no silent
normalization happens.  Use :meth:`MoebiusMatrix.normalized` when a canonical
representative is wanted.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Sequence

from .exactnum import (
    INFINITY,
    ExtPoint,
    Interval,
    QuadSurd,
    RationalLike,
    as_fraction,
    as_point,
)

__all__ = [
    "MoebiusMatrix",
    "projectively_equal",
    "compose_word",
]


class MoebiusMatrix:
    """Rational 2x2 matrix acting by x |-> (c + d*x)/(a + b*x)."""

    __slots__ = ("a", "b", "c", "d")

    def __init__(self, a: RationalLike, b: RationalLike,
                 c: RationalLike, d: RationalLike):
        self.a = as_fraction(a)
        self.b = as_fraction(b)
        self.c = as_fraction(c)
        self.d = as_fraction(d)
        if not (self.a or self.b or self.c or self.d):
            raise ValueError("the zero matrix is not a map")

    def det(self) -> Fraction:
        return self.a * self.d - self.b * self.c

    @property
    def is_degenerate(self) -> bool:
        return self.det() == 0

    # -- algebra -----------------------------------------------------------

    def compose(self, other: "MoebiusMatrix") -> "MoebiusMatrix":
        """Matrix of the composed map self . other (plain product)."""
        return MoebiusMatrix(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        ).normalized()

    def inverse(self) -> "MoebiusMatrix":
        if self.is_degenerate:
            raise ZeroDivisionError("degenerate matrix has no inverse map")
        return MoebiusMatrix(self.d, -self.b, -self.c, self.a)

    def transpose(self) -> "MoebiusMatrix":
        return MoebiusMatrix(self.a, self.c, self.b, self.d)

    def normalized(self) -> "MoebiusMatrix":
        """Integer entries, content 1, first nonzero entry positive."""
        entries = (self.a, self.b, self.c, self.d)
        num = math.gcd(*(e.numerator for e in entries))
        if num == 0:
            raise ValueError("zero matrix")
        den = math.lcm(*(e.denominator for e in entries))
        scale = Fraction(den, num)
        scaled = [e * scale for e in entries]
        for e in scaled:
            if e != 0:
                if e < 0:
                    scaled = [-v for v in scaled]
                break
        return MoebiusMatrix(*scaled)

    # -- the map -----------------------------------------------------------

    def pole(self) -> ExtPoint | None:
        """Finite point sent to infinity, or None when there is none."""
        if self.b == 0:
            return None
        return ExtPoint(Fraction(-self.a, 1) / self.b)

    def apply(self, x) -> ExtPoint:
        x = as_point(x)
        if x.is_infinite:
            if self.b != 0:
                return ExtPoint(self.d / self.b)
            if self.d != 0:
                return INFINITY
            return ExtPoint(self.c / self.a)  # constant map
        v = x.finite()
        den = self.a + self.b * v
        num = self.c + self.d * v
        den_zero = den.p == 0 and den.q == 0
        if den_zero:
            if num.p == 0 and num.q == 0:
                raise ArithmeticError("indeterminate value 0/0")
            return INFINITY
        return ExtPoint(num / den)

    def apply_float(self, x: float) -> float:
        a, b, c, d = (float(self.a), float(self.b),
                      float(self.c), float(self.d))
        if math.isinf(x):
            return d / b if b != 0 else math.inf
        den = a + b * x
        if den == 0.0:
            return math.inf
        return (c + d * x) / den

    def deriv_abs(self, x) -> QuadSurd:
        """|f'(x)| at a finite point, exact: |det| / (a + b*x)^2."""
        x = as_point(x)
        v = x.finite()
        den = self.a + self.b * v
        if den.p == 0 and den.q == 0:
            raise ZeroDivisionError("derivative at the pole")
        return abs(QuadSurd(self.det()) / (den * den))

    def deriv_abs_float(self, x: float) -> float:
        den = float(self.a) + float(self.b) * x
        if den == 0.0:
            return math.inf
        return abs(float(self.det())) / (den * den)

    def fixed_points(self) -> list[ExtPoint]:
        """Fixed points on the extended line, sorted, infinity last.

        An elliptic map has none; the identity map raises since every point
        is fixed.
        """
        from .exactnum import solve_quadratic

        if self.b == 0:
            if self.a == self.d:
                if self.c == 0:
                    raise ValueError("identity map: every point is fixed")
                return [INFINITY]
            return [ExtPoint(self.c / (self.a - self.d)), INFINITY]
        return solve_quadratic(self.b, self.a - self.d, -self.c)

    def multiplier_at(self, t: ExtPoint) -> QuadSurd:
        """|derivative| at a fixed point, with infinity handled in the chart
        u = 1/x (giving |a/d| when b = 0)."""
        if t.is_infinite:
            if self.b != 0 or self.d == 0:
                raise ValueError("infinity is not fixed by this map")
            return abs(QuadSurd(self.a / self.d))
        return self.deriv_abs(t)

    def apply_interval(self, J: Interval) -> Interval:
        """Image of an interval avoiding the open pole.

        The map is monotone away from its pole, so the image is the interval
        spanned by the endpoint images; a pole sitting exactly on an endpoint
        sends that end to infinity.  A pole interior to J raises.  A
        degenerate matrix collapses everything to its constant value.
        """
        if self.is_degenerate:
            base = J.lo if self.pole() is None or J.lo != self.pole() else J.hi
            v = self.apply(base)
            return Interval(v, v)
        p = self.pole()
        if p is not None and J.interior_contains(p):
            raise ValueError(f"pole {p} interior to {J}")
        ends = [
            (self.apply(J.lo), J.lo_closed),
            (self.apply(J.hi), J.hi_closed),
        ]
        ends.sort(key=lambda e: _end_key(e[0]))
        (lo, lo_closed), (hi, hi_closed) = ends
        return Interval(lo, hi, lo_closed, hi_closed)

    # -- structure ---------------------------------------------------------

    def entries(self) -> tuple[Fraction, Fraction, Fraction, Fraction]:
        return (self.a, self.b, self.c, self.d)

    def entries_float(self) -> tuple[float, float, float, float]:
        return (float(self.a), float(self.b), float(self.c), float(self.d))

    def __eq__(self, other):
        if not isinstance(other, MoebiusMatrix):
            return NotImplemented
        return self.entries() == other.entries()

    def __hash__(self):
        return hash(self.entries())

    def __repr__(self) -> str:
        return (f"MoebiusMatrix({self.a}, {self.b}, {self.c}, {self.d})")

    def __str__(self) -> str:
        return f"({self.a}, {self.b}; {self.c}, {self.d})"

    def to_json(self) -> dict:
        return {"a": str(self.a), "b": str(self.b),
                "c": str(self.c), "d": str(self.d)}

    @classmethod
    def from_json(cls, obj: dict) -> "MoebiusMatrix":
        try:
            return cls(*(Fraction(obj[k]) for k in ("a", "b", "c", "d")))
        except KeyError as exc:
            raise ValueError(f"matrix object missing field {exc.args[0]!r}") from None

    @classmethod
    def from_three_points(cls, xs: Sequence[RationalLike],
                          ys: Sequence[RationalLike]) -> "MoebiusMatrix":
        """The unique map sending the three distinct finite points xs to ys."""
        if len(xs) != 3 or len(ys) != 3:
            raise ValueError("need exactly three source and target points")
        mx = _to_zero_one_inf(*map(as_fraction, xs))
        my = _to_zero_one_inf(*map(as_fraction, ys))
        return my.inverse().compose(mx)


def _to_zero_one_inf(x1: Fraction, x2: Fraction, x3: Fraction) -> MoebiusMatrix:
    # Cross-ratio chart sending x1, x2, x3 to 0, 1, infinity.
    if x1 == x2 or x1 == x3 or x2 == x3:
        raise ValueError("the three points must be distinct")
    return MoebiusMatrix(-x3 * (x2 - x1), x2 - x1,
                         -x1 * (x2 - x3), x2 - x3)


class _end_key:
    __slots__ = ("point",)

    def __init__(self, point: ExtPoint):
        self.point = point

    def __lt__(self, other: "_end_key") -> bool:
        return self.point < other.point


def projectively_equal(m: MoebiusMatrix, n: MoebiusMatrix) -> bool:
    """True when the matrices define the same fractional-linear map."""
    me, ne = m.entries(), n.entries()
    for ref in range(4):
        if me[ref] != 0 or ne[ref] != 0:
            break
    else:
        raise ValueError("zero matrix")
    if me[ref] == 0 or ne[ref] == 0:
        return False
    return all(me[i] * ne[ref] == ne[i] * me[ref] for i in range(4))


def compose_word(matrices: Sequence[MoebiusMatrix]) -> MoebiusMatrix:
    """Matrix of the left-to-right composition f1 . f2 . ... . fn."""
    if not matrices:
        raise ValueError("empty word")
    acc = matrices[0]
    for m in matrices[1:]:
        acc = acc.compose(m)
    return acc
