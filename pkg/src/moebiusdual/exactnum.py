"""Exact scalar arithmetic: rationals, quadratic surds, extended-line points.

Every algebraic decision made elsewhere in the package (endpoint ordering,
partition consistency, conjugacy checks) reduces to a sign determination over
Q or over a real quadratic field Q(sqrt(D)).  This module keeps those
decisions exact: ``fractions.Fraction`` carries the rational work,
:class:`QuadSurd` the quadratic-field work, and :class:`ExtPoint` adjoins the
point at infinity needed for unbounded intervals.

Comparisons between surds from different fields fall back to certified
interval enclosures (mpmath) with doubling precision; an algebraic equality
certificate runs first, so the refinement loop always terminates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence, Union

__all__ = [
    "QuadSurd",
    "ExtPoint",
    "INFINITY",
    "Interval",
    "as_fraction",
    "as_surd",
    "as_point",
    "solve_quadratic",
    "order_points",
    "OrderedPoints",
    "scalar_to_json",
    "scalar_from_json",
]

RationalLike = Union[int, Fraction]
ScalarLike = Union[int, Fraction, "QuadSurd"]

# Refinement cap for cross-field comparisons.  Unreachable in practice (the
# equality certificate filters the equal case first), kept as a hard stop.
_MAX_COMPARE_BITS = 1 << 16


def as_fraction(x: RationalLike) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    raise TypeError(f"not a rational value: {x!r}")


def _rational_sqrt(r: Fraction) -> Fraction | None:
    """Return sqrt(r) when r is the square of a rational, else None."""
    if r < 0:
        return None
    n, d = r.numerator, r.denominator
    sn, sd = math.isqrt(n), math.isqrt(d)
    if sn * sn == n and sd * sd == d:
        return Fraction(sn, sd)
    return None


class QuadSurd:
    """A real number p + q*sqrt(disc) with p, q, disc rational, disc >= 0.

    Normal form: disc == 0 exactly when the value is rational (a disc that is
    a perfect rational square is folded into p).  Arithmetic is closed within
    a fixed field: mixing two irrational surds with different discs raises,
    since no pipeline step needs it; comparisons across fields are supported.
    """

    __slots__ = ("p", "q", "disc")

    def __init__(self, p: RationalLike = 0, q: RationalLike = 0,
                 disc: RationalLike = 0):
        p = as_fraction(p)
        q = as_fraction(q)
        disc = as_fraction(disc)
        if disc < 0:
            raise ValueError("negative discriminant has no real square root")
        if q == 0:
            disc = Fraction(0)
        else:
            root = _rational_sqrt(disc)
            if root is not None:
                p = p + q * root
                q = Fraction(0)
                disc = Fraction(0)
        self.p = p
        self.q = q
        self.disc = disc

    # -- constructors ------------------------------------------------------

    @classmethod
    def from_rational(cls, x: RationalLike) -> "QuadSurd":
        return cls(as_fraction(x))

    @classmethod
    def sqrt(cls, x: RationalLike) -> "QuadSurd":
        return cls(0, 1, as_fraction(x))

    # -- predicates --------------------------------------------------------

    @property
    def is_rational(self) -> bool:
        return self.q == 0

    def as_fraction(self) -> Fraction:
        if not self.is_rational:
            raise ValueError(f"not a rational value: {self}")
        return self.p

    # -- arithmetic (closed within one field) ------------------------------

    def _coerce(self, other) -> "QuadSurd | None":
        if isinstance(other, QuadSurd):
            return other
        if isinstance(other, (int, Fraction)):
            return QuadSurd(other)
        return None

    def _join_disc(self, other: "QuadSurd") -> Fraction:
        if self.is_rational:
            return other.disc
        if other.is_rational or other.disc == self.disc:
            return self.disc
        raise ValueError(
            f"surd arithmetic across fields: sqrt({self.disc}) vs sqrt({other.disc})")

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        d = self._join_disc(o)
        return QuadSurd(self.p + o.p, self.q + o.q, d)

    __radd__ = __add__

    def __neg__(self):
        return QuadSurd(-self.p, -self.q, self.disc)

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o + (-self)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        d = self._join_disc(o)
        return QuadSurd(self.p * o.p + self.q * o.q * d,
                        self.p * o.q + self.q * o.p, d)

    __rmul__ = __mul__

    def conjugate(self) -> "QuadSurd":
        return QuadSurd(self.p, -self.q, self.disc)

    def inverse(self) -> "QuadSurd":
        if self.p == 0 and self.q == 0:
            raise ZeroDivisionError("division by zero surd")
        # (p + q sqrt(D))^-1 = (p - q sqrt(D)) / (p^2 - q^2 D); the norm is a
        # nonzero rational because sqrt(D) is irrational in normal form.
        norm = self.p * self.p - self.q * self.q * self.disc
        return QuadSurd(self.p / norm, -self.q / norm, self.disc)

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self * o.inverse()

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o * self.inverse()

    # -- sign and comparison ----------------------------------------------

    def sign(self) -> int:
        """Exact sign, decided within the surd's own field."""
        if self.q == 0:
            return (self.p > 0) - (self.p < 0)
        if self.p == 0:
            return 1 if self.q > 0 else -1
        sp = 1 if self.p > 0 else -1
        sq = 1 if self.q > 0 else -1
        if sp == sq:
            return sp
        # opposite signs: |p| vs |q| sqrt(D); equality is impossible since
        # sqrt(D) is irrational here.
        return sp if self.p * self.p > self.q * self.q * self.disc else sq

    def __abs__(self) -> "QuadSurd":
        return -self if self.sign() < 0 else self

    def _cmp(self, other: "QuadSurd") -> int:
        if self.is_rational or other.is_rational or self.disc == other.disc:
            return (self - other).sign()
        # Cross-field.  Equality certificate for a + b sqrt(D1) = -c sqrt(D2)
        # with a = p1-p2, b = q1, c = -q2 (b, c nonzero, both discs
        # irrational): needs a = 0, matching signs, and b^2 D1 = c^2 D2.
        a = self.p - other.p
        b, c = self.q, -other.q
        if (a == 0 and b * b * self.disc == c * c * other.disc
                and (b > 0) == (c < 0)):
            return 0
        return _enclosure_cmp(self, other)

    def __eq__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self._cmp(o) == 0

    def __ne__(self, other):
        result = self.__eq__(other)
        if result is NotImplemented:
            return result
        return not result

    def __lt__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self._cmp(o) < 0

    def __le__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self._cmp(o) <= 0

    def __gt__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self._cmp(o) > 0

    def __ge__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self._cmp(o) >= 0

    __hash__ = None  # value-equality crosses representations; keep unhashable

    # -- conversions -------------------------------------------------------

    def __float__(self) -> float:
        return float(self.p) + float(self.q) * math.sqrt(float(self.disc))

    def __str__(self) -> str:
        if self.is_rational:
            return str(self.p)
        qpart = f"{self.q}*sqrt({self.disc})"
        if self.p == 0:
            return qpart
        sign = "+" if self.q > 0 else "-"
        return f"{self.p}{sign}{abs(self.q)}*sqrt({self.disc})"

    def __repr__(self) -> str:
        return f"QuadSurd({self.p!r}, {self.q!r}, {self.disc!r})"


def _enclosure_cmp(x: QuadSurd, y: QuadSurd) -> int:
    """Sign of x - y for provably unequal surds, via interval refinement."""
    from mpmath import iv

    prec = 64
    while prec <= _MAX_COMPARE_BITS:
        saved = iv.prec
        iv.prec = prec
        try:
            ex = _iv_value(iv, x)
            ey = _iv_value(iv, y)
            if ex.b < ey.a:
                return -1
            if ey.b < ex.a:
                return 1
        finally:
            iv.prec = saved
        prec *= 2
    raise ArithmeticError(f"unresolved comparison: {x} vs {y}")


def _iv_value(iv, s: QuadSurd):
    def frac(f: Fraction):
        return iv.mpf(f.numerator) / iv.mpf(f.denominator)

    return frac(s.p) + frac(s.q) * iv.sqrt(frac(s.disc))


def as_surd(x: ScalarLike) -> QuadSurd:
    if isinstance(x, QuadSurd):
        return x
    return QuadSurd(as_fraction(x))


class ExtPoint:
    """A point of the extended line: a finite :class:`QuadSurd` or +infinity.

    Infinity compares greater than every finite point.  Only the single
    unsigned infinity of the one-point compactification is modeled, used here
    exclusively as the right end of unbounded intervals and as the image of a
    pole under a fractional-linear map.
    """

    __slots__ = ("value",)

    def __init__(self, value: "QuadSurd | RationalLike | None"):
        if value is None:
            self.value = None
        else:
            self.value = as_surd(value)

    @property
    def is_infinite(self) -> bool:
        return self.value is None

    @property
    def is_finite(self) -> bool:
        return self.value is not None

    def finite(self) -> QuadSurd:
        if self.value is None:
            raise ValueError("infinite point has no finite value")
        return self.value

    def as_fraction(self) -> Fraction:
        return self.finite().as_fraction()

    def _cmp(self, other: "ExtPoint") -> int:
        if self.is_infinite and other.is_infinite:
            return 0
        if self.is_infinite:
            return 1
        if other.is_infinite:
            return -1
        return self.value._cmp(other.value)

    def __eq__(self, other):
        if not isinstance(other, (ExtPoint, QuadSurd, int, Fraction)):
            return NotImplemented
        return self._cmp(as_point(other)) == 0

    def __ne__(self, other):
        result = self.__eq__(other)
        if result is NotImplemented:
            return result
        return not result

    def __lt__(self, other):
        return self._cmp(as_point(other)) < 0

    def __le__(self, other):
        return self._cmp(as_point(other)) <= 0

    def __gt__(self, other):
        return self._cmp(as_point(other)) > 0

    def __ge__(self, other):
        return self._cmp(as_point(other)) >= 0

    __hash__ = None

    def __float__(self) -> float:
        if self.is_infinite:
            return math.inf
        return float(self.value)

    def __str__(self) -> str:
        return "inf" if self.is_infinite else str(self.value)

    def __repr__(self) -> str:
        return f"ExtPoint({'inf' if self.is_infinite else self.value!r})"


INFINITY = ExtPoint(None)


def as_point(x) -> ExtPoint:
    if isinstance(x, ExtPoint):
        return x
    if isinstance(x, (QuadSurd, int, Fraction)):
        return ExtPoint(x)
    raise TypeError(f"not a point value: {x!r}")


@dataclass(eq=True)
class Interval:
    """An interval of the extended line with explicit closure flags.

    ``lo`` must be finite.  ``hi`` may be infinite, in which case the upper
    end is forced open ([a, inf[ in the usual notation).  A degenerate
    interval (lo == hi) must be closed on both sides and models a one-point
    set.
    """

    lo: ExtPoint
    hi: ExtPoint
    lo_closed: bool = True
    hi_closed: bool = True

    def __post_init__(self):
        self.lo = as_point(self.lo)
        self.hi = as_point(self.hi)
        if self.lo.is_infinite:
            raise ValueError("interval lower end must be finite")
        if self.hi.is_infinite:
            self.hi_closed = False
        if self.lo > self.hi:
            raise ValueError(f"empty interval: lo={self.lo} > hi={self.hi}")
        if self.lo == self.hi and not (self.lo_closed and self.hi_closed):
            raise ValueError("degenerate interval must be closed")

    @property
    def is_point(self) -> bool:
        return self.lo == self.hi

    @property
    def is_bounded(self) -> bool:
        return self.hi.is_finite

    def contains(self, x) -> bool:
        x = as_point(x)
        if x.is_infinite:
            return False
        c = x._cmp(self.lo)
        if c < 0 or (c == 0 and not self.lo_closed):
            return False
        c = x._cmp(self.hi)
        if c > 0 or (c == 0 and not self.hi_closed):
            return False
        return True

    def interior_contains(self, x) -> bool:
        x = as_point(x)
        return x.is_finite and self.lo < x < self.hi

    def length(self) -> ExtPoint:
        if not self.is_bounded:
            return INFINITY
        return ExtPoint(self.hi.finite() - self.lo.finite())

    def closure_endpoints(self) -> tuple[ExtPoint, ExtPoint]:
        return self.lo, self.hi

    def lo_float(self) -> float:
        return float(self.lo)

    def hi_float(self) -> float:
        return float(self.hi)

    def to_json(self) -> dict:
        return {
            "lo": scalar_to_json(self.lo),
            "hi": scalar_to_json(self.hi),
            "lo_closed": self.lo_closed,
            "hi_closed": self.hi_closed,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Interval":
        return cls(
            scalar_from_json(obj["lo"]),
            scalar_from_json(obj["hi"]),
            bool(obj.get("lo_closed", True)),
            bool(obj.get("hi_closed", True)),
        )

    def __str__(self) -> str:
        left = "[" if self.lo_closed else "]"
        right = "]" if self.hi_closed else "["
        return f"{left}{self.lo}, {self.hi}{right}"


def solve_quadratic(c2: RationalLike, c1: RationalLike,
                    c0: RationalLike) -> list[ExtPoint]:
    """Real roots of c2 t^2 + c1 t + c0 = 0, exact, sorted ascending.

    Returns an empty list when there is no real root (negative discriminant,
    or a degenerate equation with c2 = c1 = 0 and c0 != 0).  Raises on the
    identically-zero equation.
    """
    c2, c1, c0 = as_fraction(c2), as_fraction(c1), as_fraction(c0)
    if c2 == 0:
        if c1 == 0:
            if c0 == 0:
                raise ValueError("indeterminate equation: all coefficients zero")
            return []
        return [ExtPoint(-c0 / c1)]
    disc = c1 * c1 - 4 * c2 * c0
    if disc < 0:
        return []
    center = -c1 / (2 * c2)
    if disc == 0:
        return [ExtPoint(center)]
    spread = Fraction(1, 1) / (2 * c2)
    r1 = QuadSurd(center, spread, disc)
    r2 = QuadSurd(center, -spread, disc)
    roots = [ExtPoint(r1), ExtPoint(r2)]
    roots.sort(key=_point_key)
    return roots


class _point_key:
    """Sort adapter: exact comparisons, infinity last."""

    __slots__ = ("point",)

    def __init__(self, point: ExtPoint):
        self.point = point

    def __lt__(self, other: "_point_key") -> bool:
        return self.point < other.point


@dataclass
class OrderedPoints:
    points: list[ExtPoint]
    duplicates: list[ExtPoint]


def order_points(points: Iterable) -> OrderedPoints:
    """Sort points ascending (infinity last) and report coincident values."""
    pts = [as_point(p) for p in points]
    pts.sort(key=_point_key)
    dups: list[ExtPoint] = []
    for prev, cur in zip(pts, pts[1:]):
        if prev == cur and not any(d == cur for d in dups):
            dups.append(cur)
    return OrderedPoints(pts, dups)


# -- serialization ---------------------------------------------------------


def scalar_to_json(x) -> "str | dict":
    """Serialize a scalar: rationals as 'p/q' strings, infinity as 'inf',
    irrational surds as {'p','q','disc'} dicts."""
    if isinstance(x, ExtPoint):
        if x.is_infinite:
            return "inf"
        x = x.value
    if isinstance(x, (int, Fraction)):
        x = QuadSurd(x)
    if not isinstance(x, QuadSurd):
        raise TypeError(f"not a serializable scalar: {x!r}")
    if x.is_rational:
        return str(x.p)
    return {"p": str(x.p), "q": str(x.q), "disc": str(x.disc)}


def scalar_from_json(obj) -> ExtPoint:
    if isinstance(obj, str):
        if obj.strip().lower() == "inf":
            return INFINITY
        return ExtPoint(Fraction(obj))
    if isinstance(obj, dict):
        try:
            return ExtPoint(QuadSurd(Fraction(obj["p"]), Fraction(obj["q"]),
                                     Fraction(obj["disc"])))
        except KeyError as exc:
            raise ValueError(f"surd object missing field {exc.args[0]!r}") from None
    if isinstance(obj, int):
        return ExtPoint(obj)
    raise ValueError(f"unreadable scalar: {obj!r}")
