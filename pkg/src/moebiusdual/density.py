"""Invariant densities from dual sets, and the numeric verification layer.

A dual set D (a union of intervals, or a single mass point y0) determines
the invariant density through the kernel 1/(1+xy)^2:

    h(x) = integral over D of dy/(1+xy)^2
         = sum over intervals [p, q] of (q/(1+xq) - p/(1+xp)),

with the convention that an endpoint q = infinity contributes 1/x, and
h(x) = 1/(1+x*y0)^2 in the mass-point case.  The checks offered here:

* ``kuzmin_residual``: sup over a grid of |h(x) - sum_k h(V_k x) w_k(x)|
  where V_k are the inverse branches and w_k their derivative magnitudes;
  zero (up to arithmetic) exactly when h is invariant.  Truncated systems
  and truncated series densities report an explicit tail budget next to
  the residual instead of hiding it.
* ``conformal_sum_check``: the dual-side identity
  sum over length-s words W of dual inverse branches of
  |W'(y)| / (1 + W(y)) = 1/(1+y), evaluated in exact arithmetic.
* ``density_mass`` / ``compare_orbit_histogram``: closed-form masses
  (rational plus rational multiples of logarithms of rationals) against
  empirical orbit statistics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .exactnum import (
    ExtPoint,
    Interval,
    QuadSurd,
    as_fraction,
    as_point,
)
from .moebius import MoebiusMatrix
from .systems import MoebiusSystem, Histogram

__all__ = [
    "TailBound",
    "DensityModel",
    "IntervalUnionDensity",
    "DiracDensity",
    "density_from_dual",
    "comb_series_density",
    "KuzminReport",
    "kuzmin_residual",
    "MassValue",
    "density_mass",
    "BranchFamily",
    "DualFamilies",
    "families_from_system",
    "dirac_dual_families",
    "comb_dual_families",
    "ConformalReport",
    "conformal_sum_check",
    "compare_orbit_histogram",
]

_UNIT = Interval(Fraction(0), Fraction(1))


def _to_dtype(value, dtype):
    """Convert an exact scalar to dtype without a float64 detour."""
    if isinstance(value, ExtPoint):
        if value.is_infinite:
            return dtype(np.inf)
        value = value.finite()
    if isinstance(value, QuadSurd):
        p, q, disc = value.p, value.q, value.disc
        return (_to_dtype(p, dtype)
                + _to_dtype(q, dtype) * np.sqrt(dtype(disc)))
    f = as_fraction(value)
    return dtype(f.numerator) / dtype(f.denominator)


@dataclass
class TailBound:
    """Pointwise bound on what a truncated representation drops."""

    description: str
    bound: Callable[[float], float]


class DensityModel:
    """Shared surface of the two density representations."""

    base: Interval
    tail: "TailBound | None"

    def value_exact(self, x):
        raise NotImplementedError

    def value_float(self, x: float) -> float:
        raise NotImplementedError

    def value_array(self, xs: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def tail_float(self, x: float) -> float:
        return self.tail.bound(x) if self.tail is not None else 0.0

    def tail_array(self, xs: np.ndarray) -> np.ndarray:
        if self.tail is None:
            return np.zeros_like(xs)
        return np.vectorize(self.tail.bound, otypes=[xs.dtype])(xs)

    def mass_over(self, over: Interval) -> "MassValue":
        raise NotImplementedError

    @property
    def is_dirac(self) -> bool:
        return False

    def sup_float(self, over: "Interval | None" = None) -> float:
        """Upper bound for the density over the interval, tail included.

        Each kernel term is monotone in x, so when the dual set lies on one
        side of zero the density is monotone and the bound is attained at
        an end of the interval.  Mixed-sign dual sets fall back to the
        larger end value, which is exact only up to interior bumps; no
        truncated system in this package pairs with one.
        """
        over = self.base if over is None else over
        lo = over.lo_float()
        hi = over.hi_float()
        ends = [lo] if math.isinf(hi) else [lo, hi]
        return max(self.value_float(t) + self.tail_float(t) for t in ends)


class IntervalUnionDensity(DensityModel):
    """Density of a dual set given as disjoint intervals, possibly the
    leading part of a countable family with a tail bound for the rest."""

    def __init__(self, pieces: Sequence[Interval], base: "Interval | None" = None,
                 tail: "TailBound | None" = None):
        self.base = _UNIT if base is None else base
        self.pieces = sorted(pieces, key=lambda J: (J.lo_float(), J.hi_float()))
        if not self.pieces:
            raise ValueError("empty dual set")
        for left, right in zip(self.pieces, self.pieces[1:]):
            if not left.hi < right.lo and not (
                    left.hi == right.lo and not (left.hi_closed
                                                 and right.lo_closed)):
                raise ValueError(
                    f"overlapping dual intervals {left} and {right}")
        self.tail = tail
        _check_kernel_sign(self.base, self.pieces)
        # Closure flags never enter the closed form; only the endpoint
        # values below do.
        self._ends = [(J.lo, J.hi) for J in self.pieces]
        self._arrays: dict = {}

    @property
    def is_bounded(self) -> bool:
        return all(q.is_finite for _, q in self._ends)

    def value_exact(self, x):
        """h(x) in exact arithmetic; x must not be 0 when the set is
        unbounded (the density has a 1/x singularity there)."""
        if not isinstance(x, QuadSurd):
            x = as_fraction(x)
        total = Fraction(0)
        for p, q in self._ends:
            total = total + self._term_exact(q, x) - self._term_exact(p, x)
        return total

    @staticmethod
    def _term_exact(t: ExtPoint, x: Fraction):
        if t.is_infinite:
            if x == 0:
                raise ZeroDivisionError("density pole at 0")
            return Fraction(1) / x
        v = t.finite()
        den = 1 + x * v
        if den.sign() == 0:
            raise ArithmeticError(f"kernel pole at x = {x}")
        return v / den

    def _piece_arrays(self, dtype):
        key = np.dtype(dtype).name
        if key not in self._arrays:
            ps = np.array([_to_dtype(p, dtype) for p, _ in self._ends],
                          dtype=dtype)
            qs = np.array([_to_dtype(q, dtype) for _, q in self._ends],
                          dtype=dtype)
            self._arrays[key] = (ps, qs)
        return self._arrays[key]

    def value_array(self, xs: np.ndarray) -> np.ndarray:
        ps, qs = self._piece_arrays(xs.dtype.type)
        acc = np.zeros_like(xs)
        for p, q in zip(ps, qs):
            if np.isinf(q):
                acc += 1.0 / xs
            else:
                acc += q / (1.0 + xs * q)
            acc -= p / (1.0 + xs * p)
        return acc

    def value_float(self, x: float) -> float:
        return float(self.value_array(np.array([x], dtype=np.float64))[0])

    def mass_over(self, over: Interval) -> "MassValue":
        u = over.lo.as_fraction()
        v = over.hi.as_fraction() if over.hi.is_finite else None
        if v is None:
            raise ValueError("mass over an unbounded interval")
        logs: list[tuple[Fraction, Fraction]] = []
        # Coefficients of equal endpoints cancel before any log is formed,
        # so touching pieces never manufacture a spurious pole.
        terms: list[list] = []
        for p, q in self._ends:
            if q.is_infinite:
                if u <= 0 <= v:
                    return MassValue(infinite=True)
                logs.append((Fraction(1), Fraction(v, u)))
            else:
                _bump(terms, Fraction(1), q.finite())
            _bump(terms, Fraction(-1), p.finite())
        for coeff, t in terms:
            if coeff == 0:
                continue
            num = 1 + v * t
            den = 1 + u * t
            if num.sign() <= 0 or den.sign() <= 0:
                # The kernel vanishes somewhere on [u, v]; the density has a
                # non-integrable end there.
                return MassValue(infinite=True)
            arg = num / den
            if not arg.is_rational:
                raise ArithmeticError(
                    f"mass has no closed form over endpoint {t}")
            logs.append((coeff, arg.as_fraction()))
        return MassValue(Fraction(0), _merge_logs(logs))

    def to_json(self) -> dict:
        out = {
            "kind": "interval_union",
            "base": self.base.to_json(),
            "pieces": [J.to_json() for J in self.pieces],
        }
        if self.tail is not None:
            out["tail"] = self.tail.description
        return out

    def __repr__(self) -> str:
        shown = ", ".join(str(J) for J in self.pieces[:3])
        more = f", ... ({len(self.pieces)} pieces)" if len(self.pieces) > 3 \
            else ""
        return f"IntervalUnionDensity({shown}{more})"


def _bump(terms: list, coeff: Fraction, t) -> None:
    # QuadSurd endpoints are unhashable on purpose, so merging is by
    # pairwise equality rather than a dict.
    for row in terms:
        if row[1] == t:
            row[0] += coeff
            return
    terms.append([coeff, t])


def _merge_logs(logs):
    out = []
    for coeff, arg in logs:
        if arg == 1 or coeff == 0:
            continue
        for i, (c0, a0) in enumerate(out):
            if a0 == arg:
                out[i] = (c0 + coeff, arg)
                break
        else:
            out.append((coeff, arg))
    return [(c, a) for c, a in out if c != 0]


class DiracDensity(DensityModel):
    """Density when the dual set degenerates to one mass point y0:
    h(x) = 1/(1+x*y0)^2, constant 1 for y0 = 0."""

    def __init__(self, point, base: "Interval | None" = None):
        self.base = _UNIT if base is None else base
        pt = as_point(point)
        if pt.is_infinite:
            raise ValueError("mass point must be finite")
        self.point = pt
        _check_kernel_sign(self.base, [Interval(pt, pt)])
        self.tail = None

    @property
    def is_dirac(self) -> bool:
        return True

    def value_exact(self, x):
        if not isinstance(x, QuadSurd):
            x = as_fraction(x)
        den = 1 + x * self.point.finite()
        return 1 / (den * den)

    def value_array(self, xs: np.ndarray) -> np.ndarray:
        y0 = _to_dtype(self.point, xs.dtype.type)
        den = 1.0 + xs * y0
        return 1.0 / (den * den)

    def value_float(self, x: float) -> float:
        return float(self.value_array(np.array([x], dtype=np.float64))[0])

    def mass_over(self, over: Interval) -> "MassValue":
        u = over.lo.as_fraction()
        y0 = self.point.finite().as_fraction()
        den_u = 1 + u * y0
        if den_u <= 0:
            return MassValue(infinite=True)
        if not over.hi.is_finite:
            if y0 <= 0:
                return MassValue(infinite=True)
            return MassValue(1 / (y0 * den_u))
        v = over.hi.as_fraction()
        den_v = 1 + v * y0
        if den_v <= 0:
            return MassValue(infinite=True)
        return MassValue((v - u) / (den_u * den_v))

    def to_json(self) -> dict:
        from .exactnum import scalar_to_json

        return {
            "kind": "dirac",
            "base": self.base.to_json(),
            "point": scalar_to_json(self.point),
        }

    def __repr__(self) -> str:
        return f"DiracDensity({self.point})"


def _check_kernel_sign(base: Interval, pieces: Sequence[Interval]) -> None:
    # 1 + x*y is bilinear, so its minimum over a product of intervals sits
    # at a corner; a negative corner puts a kernel pole inside the box.
    # Zero corners are allowed: the density then diverges at that end of
    # the base but stays positive and finite inside.
    for J in pieces:
        for x in (base.lo, base.hi):
            if x.is_infinite:
                if J.lo.finite().sign() < 0:
                    raise ValueError("inadmissible dual set")
                continue
            for y in (J.lo, J.hi):
                if y.is_infinite:
                    if x.finite().sign() < 0:
                        raise ValueError("inadmissible dual set")
                elif (1 + x.finite() * y.finite()).sign() < 0:
                    raise ValueError("inadmissible dual set")


def density_from_dual(dual_set, base: "Interval | None" = None) -> DensityModel:
    """Closed-form invariant density for a dual set.

    ``dual_set`` may be a point (mass-point case), an interval, a list of
    disjoint intervals, a dual system (its branch domains form the set), or
    a dual-construction witness.  ``base`` is where the density lives; the
    unit interval when omitted.  Raises ``ValueError("inadmissible dual
    set")`` when the kernel has a pole inside base x dual set.
    """
    inner = getattr(dual_set, "dual", None)
    if isinstance(inner, MoebiusSystem):
        dual_set = inner
    if isinstance(dual_set, MoebiusSystem):
        pieces = _merge_adjacent([br.domain for br in dual_set.branches])
        if len(pieces) == 1 and pieces[0].is_point:
            return DiracDensity(pieces[0].lo, base)
        return IntervalUnionDensity(pieces, base)
    if isinstance(dual_set, Interval):
        if dual_set.is_point:
            return DiracDensity(dual_set.lo, base)
        return IntervalUnionDensity([dual_set], base)
    if isinstance(dual_set, (list, tuple)):
        return IntervalUnionDensity(_merge_adjacent(list(dual_set)), base)
    return DiracDensity(dual_set, base)


def _merge_adjacent(pieces: list[Interval]) -> list[Interval]:
    pieces = sorted(pieces, key=lambda J: (J.lo_float(), J.hi_float()))
    out: list[Interval] = []
    for J in pieces:
        if out and out[-1].hi == J.lo:
            prev = out[-1]
            out[-1] = Interval(prev.lo, J.hi, prev.lo_closed, J.hi_closed)
        else:
            out.append(J)
    return out


def comb_series_density(truncation: int) -> IntervalUnionDensity:
    """Leading part of the series density whose dual set is the union of
    the intervals ]2k, 2k+1]: term k equals 1/((1+2kx)(1+(2k+1)x)).

    The dropped remainder telescopes below 1/(x*(1+2(K+1)x)), which is the
    attached tail bound.
    """
    if truncation < 0:
        raise ValueError("truncation must be nonnegative")
    K = truncation
    pieces = [
        Interval(Fraction(2 * k), Fraction(2 * k + 1),
                 lo_closed=(k == 0), hi_closed=True)
        for k in range(K + 1)
    ]
    tail = TailBound(
        description=f"sum of the dropped terms k > {K}, "
                    "below 1/(x*(1+2(K+1)*x))",
        bound=lambda x, _K=K: 1.0 / (x * (1.0 + 2.0 * (_K + 1) * x)),
    )
    return IntervalUnionDensity(pieces, tail=tail)


# -- the invariance residual ----------------------------------------------


@dataclass
class KuzminReport:
    """Sup-norm residual of the invariance equation on a grid, with the
    truncation budget kept separate from the arithmetic result."""

    residual: float
    tail_budget: float
    worst_x: float
    grid: int
    exact: bool = False
    exact_residual: object = None
    points: "list[tuple[float, float]] | None" = None

    def __str__(self) -> str:
        mode = "exact" if self.exact else "float"
        return (f"kuzmin residual {self.residual:.3e} "
                f"(tail budget {self.tail_budget:.3e}, worst x "
                f"{self.worst_x:.6g}, {self.grid} points, {mode})")


def _grid_window(system: MoebiusSystem, window) -> tuple[Fraction, Fraction]:
    if window is None:
        if not system.base.is_bounded:
            raise ValueError("grid needs a bounded window on this base")
        return (system.base.lo.as_fraction(), system.base.hi.as_fraction())
    if isinstance(window, Interval):
        if not window.is_bounded:
            raise ValueError("window must be bounded")
        return (window.lo.as_fraction(), window.hi.as_fraction())
    lo, hi = window
    return (as_fraction(lo), as_fraction(hi))


def kuzmin_residual(system: MoebiusSystem, density: DensityModel,
                    grid: int, window=None, exact: bool = False,
                    keep_points: bool = False) -> KuzminReport:
    """sup over the grid of |h(x) - sum_k h(V_k x) * w_k(x)|.

    Grid points sit at half-step offsets inside the window (the base when
    omitted), never on branch boundaries.  The float path runs in extended
    precision; truncation tails (of the branch family and of the density
    representation) go into ``tail_budget``, not into the residual.  The
    exact path restricts to finite systems and tail-free densities and
    returns an exact rational supremum coerced to float in the report
    (use it as the slow oracle; residual 0.0 there means identically zero).
    """
    if grid <= 0:
        raise ValueError("grid must be positive")
    lo, hi = _grid_window(system, window)
    if not lo < hi:
        raise ValueError("window is empty")

    if exact:
        if system.tail is not None or density.tail is not None:
            raise ValueError("exact mode needs a finite system and density")
        inverses = [br.inverse_matrix() for br in system.branches]
        step = Fraction(hi - lo, grid)
        worst = None
        worst_x = lo
        for i in range(grid):
            x = lo + step * Fraction(2 * i + 1, 2)
            total = 0
            for inv in inverses:
                total = total + density.value_exact(
                    inv.apply(x).finite()) * inv.deriv_abs(x)
            r = abs(density.value_exact(x) - total)
            if worst is None or r > worst:
                worst, worst_x = r, x
        return KuzminReport(float(worst), 0.0, float(worst_x), grid,
                            exact=True, exact_residual=worst)

    dtype = np.longdouble
    xs = (_to_dtype(lo, dtype)
          + (np.arange(grid, dtype=dtype) + 0.5)
          * (_to_dtype(hi - lo, dtype) / dtype(grid)))
    hx = density.value_array(xs)
    budget = density.tail_array(xs).astype(dtype)

    entries = [
        tuple(_to_dtype(getattr(br.inverse_matrix(), name), dtype)
              for name in ("a", "b", "c", "d"))
        for br in system.branches
    ]
    a = np.array([e[0] for e in entries], dtype=dtype)
    b = np.array([e[1] for e in entries], dtype=dtype)
    c = np.array([e[2] for e in entries], dtype=dtype)
    d = np.array([e[3] for e in entries], dtype=dtype)
    dets = np.abs(a * d - b * c)

    acc = np.zeros_like(xs)
    has_density_tail = density.tail is not None
    chunk = max(1, 500_000 // max(grid, 1))
    for start in range(0, system.branch_count, chunk):
        sl = slice(start, start + chunk)
        den = a[sl, None] + b[sl, None] * xs[None, :]
        img = (c[sl, None] + d[sl, None] * xs[None, :]) / den
        w = dets[sl, None] / (den * den)
        acc += np.sum(w * density.value_array(img), axis=0)
        if has_density_tail:
            budget += np.sum(w * density.tail_array(img), axis=0)

    if system.tail is not None:
        sup_h = density.sup_float(system.base)
        weights = np.vectorize(system.tail.weight_bound,
                               otypes=[np.float64])(
            xs.astype(np.float64))
        budget += dtype(sup_h) * weights.astype(dtype)

    res = np.abs(hx - acc)
    i = int(np.argmax(res))
    points = None
    if keep_points:
        points = [(float(x), float(r)) for x, r in zip(xs, res)]
    return KuzminReport(float(res[i]), float(np.max(budget)), float(xs[i]),
                        grid, points=points)


# -- masses ----------------------------------------------------------------


@dataclass
class MassValue:
    """Exact mass: a rational plus rational multiples of logs of rationals.

    ``infinite`` flags a divergent integral (unbounded dual set with the
    integration range touching 0); the numeric value is then meaningless.
    """

    rational: Fraction = Fraction(0)
    logs: list[tuple[Fraction, Fraction]] = field(default_factory=list)
    infinite: bool = False

    def __float__(self) -> float:
        if self.infinite:
            return math.inf
        total = float(self.rational)
        for coeff, arg in self.logs:
            total += float(coeff) * math.log(float(arg))
        return total

    def float_bounds(self) -> tuple[float, float]:
        """Rigorous enclosure of the value (interval arithmetic at 80 bits);
        the plain float() is accurate to a few ulp but carries no proof."""
        if self.infinite:
            return (math.inf, math.inf)
        from mpmath import iv

        saved = iv.prec
        iv.prec = 80
        try:
            acc = iv.mpf(self.rational.numerator) / self.rational.denominator
            for coeff, arg in self.logs:
                term = iv.log(iv.mpf(arg.numerator) / arg.denominator)
                acc += (iv.mpf(coeff.numerator) / coeff.denominator) * term
            return (float(acc.a), float(acc.b))
        finally:
            iv.prec = saved

    def __str__(self) -> str:
        if self.infinite:
            return "infinite"
        if len(self.logs) > 8:
            return f"~{float(self):.9g} ({len(self.logs)} log terms)"
        parts = []
        if self.rational != 0 or not self.logs:
            parts.append(str(self.rational))
        for coeff, arg in self.logs:
            if coeff == 1:
                parts.append(f"ln({arg})")
            elif coeff == -1:
                parts.append(f"-ln({arg})")
            else:
                parts.append(f"{coeff}*ln({arg})")
        out = " + ".join(parts)
        return out.replace("+ -", "- ")


def density_mass(density: DensityModel,
                 over: "Interval | None" = None) -> MassValue:
    """Exact mass of the density over the interval (the whole base when
    omitted); ``MassValue(infinite=True)`` when the integral diverges."""
    over = density.base if over is None else over
    return density.mass_over(over)


# -- dual branch families and the conformal identity -----------------------


@dataclass
class BranchFamily:
    """One matrix acting on every piece of a (possibly countable) family.

    ``pieces`` lists the family's domains, truncated for countable
    families; a mass-point dual uses a single degenerate interval.
    """

    matrix: MoebiusMatrix
    pieces: list[Interval]
    label: str = ""

    def contains(self, y) -> bool:
        y = as_point(y)
        return any(J.contains(y) for J in self.pieces)


@dataclass
class DualFamilies:
    """Inverse-branch enumeration of a dual map, family by family."""

    support: list[Interval]
    families: list[BranchFamily]
    truncation: "int | None" = None

    def supports(self, y) -> bool:
        y = as_point(y)
        return any(J.contains(y) for J in self.support)


def families_from_system(dual: MoebiusSystem) -> DualFamilies:
    """Each branch of a finite dual system is its own one-piece family."""
    fams = [BranchFamily(br.matrix, [br.domain], br.label)
            for br in dual.branches]
    return DualFamilies([dual.base], fams)


def dirac_dual_families(system: MoebiusSystem, point=0) -> DualFamilies:
    """Formal dual families when the dual set is a single mass point: the
    transposed branch matrices, each constrained to the point itself."""
    pt = as_point(point)
    spot = Interval(pt, pt)
    fams = [BranchFamily(br.matrix.transpose(), [spot], br.label)
            for br in system.branches]
    return DualFamilies([spot], fams, truncation=None)


def comb_dual_families(truncation: int) -> DualFamilies:
    """Dual families for the comb system, truncated listings.

    The dual set is the union of ]2k, 2k+1], k >= 0.  Three families cover
    it: y - 2 on the pieces with k >= 1, and the two reciprocal families on
    the countable splitting ]1/(j+2), 1/(j+1)] of the first piece.  Each
    family's inverse maps the whole dual set into that family's pieces, so
    word sums need no per-word truncation.
    """
    if truncation < 1:
        raise ValueError("truncation must be at least 1")
    K = truncation
    support = [
        Interval(Fraction(2 * k), Fraction(2 * k + 1),
                 lo_closed=False, hi_closed=True)
        for k in range(K + 1)
    ]
    shift = [
        Interval(Fraction(2 * k), Fraction(2 * k + 1),
                 lo_closed=False, hi_closed=True)
        for k in range(1, K + 2)
    ]
    recip_even = [
        Interval(Fraction(1, 2 * k + 2), Fraction(1, 2 * k + 1),
                 lo_closed=False, hi_closed=True)
        for k in range(K + 1)
    ]
    recip_odd = [
        Interval(Fraction(1, 2 * k + 3), Fraction(1, 2 * k + 2),
                 lo_closed=False, hi_closed=True)
        for k in range(K + 1)
    ]
    fams = [
        BranchFamily(MoebiusMatrix(1, 0, -2, 1), shift, "shift"),
        BranchFamily(MoebiusMatrix(0, 1, 1, -1), recip_even, "recip-even"),
        BranchFamily(MoebiusMatrix(0, 1, 1, -2), recip_odd, "recip-odd"),
    ]
    return DualFamilies(support, fams, truncation=K)


@dataclass
class ConformalReport:
    value: Fraction
    target: Fraction
    words: int
    dropped: int

    @property
    def residual(self):
        return abs(self.value - self.target)

    def __str__(self) -> str:
        drop = f", {self.dropped} words outside the family domains" \
            if self.dropped else ""
        return (f"conformal sum {self.value} vs 1/(1+y) = {self.target}, "
                f"residual {self.residual} ({self.words} words{drop})")


def conformal_sum_check(dual, y, depth: int,
                        max_words: int = 10 ** 6) -> ConformalReport:
    """Exact check of sum over length-``depth`` inverse-branch words W of
    |W'(y)| / (1 + W(y)) against 1/(1+y).

    ``dual`` is a :class:`DualFamilies` or a finite dual system.  A word is
    counted only while every partial image stays inside the acting family's
    pieces; filtered words are tallied in ``dropped`` (a correct family
    enumeration drops nothing at interior points).  Depth 0 is the empty
    word: the sum is 1/(1+y) itself and the residual is zero.
    """
    if isinstance(dual, MoebiusSystem):
        dual = families_from_system(dual)
    if depth < 0:
        raise ValueError("depth must be nonnegative")
    if len(dual.families) ** depth > max_words:
        raise ValueError(
            f"{len(dual.families)}^{depth} words exceed the cap {max_words}")
    if not dual.supports(y):
        raise ValueError(f"{y} not in the dual set")

    inverses = [fam.matrix.inverse() for fam in dual.families]
    dropped = 0
    completed = 0

    def rec(z, d: int):
        nonlocal dropped, completed
        if d == 0:
            completed += 1
            return 1 / (1 + z)
        total = Fraction(0)
        for fam, inv in zip(dual.families, inverses):
            img = inv.apply(z)
            if img.is_infinite or not fam.contains(img):
                dropped += len(dual.families) ** (d - 1)
                continue
            total = total + inv.deriv_abs(z) * rec(img.finite(), d - 1)
        return total

    y0 = as_point(y).finite()
    value = rec(y0, depth)
    target = 1 / (1 + y0)
    return ConformalReport(value, target, completed, dropped)


# -- orbit statistics vs the model ----------------------------------------


def compare_orbit_histogram(hist: Histogram,
                            density: DensityModel) -> float:
    """Sup over bins of |empirical frequency - normalized model mass|."""
    edges = [Fraction(float(e)) for e in hist.edges]
    total = density.mass_over(
        Interval(edges[0], edges[-1]))
    if total.infinite:
        raise ValueError("not normalizable")
    total_f = float(total)
    worst = 0.0
    freqs = hist.frequencies()
    for i in range(len(edges) - 1):
        mass = density.mass_over(Interval(edges[i], edges[i + 1]))
        expected = float(mass) / total_f
        worst = max(worst, abs(float(freqs[i]) - expected))
    return worst
