"""Dual-system decisions: conjugacy maps, existence conditions, and the
endpoint-constraint solver that builds dual partitions.

For a system T with inverse branches V_k, a dual system acts on a second
interval through the transposed branch matrices and reproduces T's invariant
density via the kernel 1/(1+xy)^2.  Three layers decide what exists:

* a fractional-linear conjugacy with symmetric coefficient matrix, found by
  solving one homogeneous linear condition per branch (dual differentiably
  isomorphic to the original map);
* for the parameterized 3-branch family, closed-form scalar conditions (the
  vanishing of a 3x3 determinant, one polynomial relation per type);
* a generic endpoint-constraint solver that, given a candidate left-to-right
  arrangement of the dual pieces, turns the boundary conditions into exact
  fixed-point and image equations, enumerates all root combinations, and
  returns every admissible dual.  This also finds duals whose arrangement is
  not conjugacy-compatible (the exceptional ones) and produces certified
  infeasibility when no combination survives.

Order strings use the letters l, m, n for the first, second, and third
primal branch, left to right; "lnm" means the dual pieces carry branches
1, 3, 2 in ascending position.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

from .exactnum import ExtPoint, Interval, as_fraction, as_point
from .moebius import MoebiusMatrix, projectively_equal
from .systems import (
    Branch,
    MoebiusSystem,
    ParamTriple,
    SystemType,
    validate_system,
)

__all__ = [
    "ORDERS",
    "mirror_order",
    "ConjugacyMap",
    "solve_conjugacy",
    "dual_link_determinant",
    "type_condition_residual",
    "condition_param_mu",
    "order_filter",
    "dual_from_conjugacy",
    "construct_dual",
    "DualReport",
    "DualWitness",
    "exceptional_condition",
    "ExceptionalOutcome",
    "symmetric_conjugacy_space",
    "SolutionSpace",
]

ORDERS = ("lmn", "lnm", "mln", "mnl", "nlm", "nml")

_LABEL_INDEX = {"l": 0, "m": 1, "n": 2}


def mirror_order(order: str) -> str:
    return order[::-1]


def _check_order(order: str) -> str:
    if order not in ORDERS:
        raise ValueError(f"unknown order {order!r}; expected one of {ORDERS}")
    return order


# -- conjugacy maps --------------------------------------------------------


class ConjugacyMap:
    """psi(t) = (b + d*t)/(a + b*t): the change of variable linking a system
    to a differentiably isomorphic dual.  The coefficient matrix (a, b; b, d)
    is symmetric by construction; a*d = b^2 makes psi constant (the dual
    collapses to a single point carrying a unit mass)."""

    __slots__ = ("a", "b", "d")

    def __init__(self, a, b, d):
        self.a = as_fraction(a)
        self.b = as_fraction(b)
        self.d = as_fraction(d)
        if self.a == 0 and self.b == 0:
            raise ValueError("coefficients define no map (a = b = 0)")

    def matrix(self) -> MoebiusMatrix:
        return MoebiusMatrix(self.a, self.b, self.b, self.d)

    @property
    def degenerate(self) -> bool:
        return self.a * self.d == self.b * self.b

    @property
    def direction(self) -> int:
        """+1 when psi is increasing, -1 decreasing, 0 constant."""
        det = self.a * self.d - self.b * self.b
        return (det > 0) - (det < 0)

    def constant_point(self) -> ExtPoint:
        if not self.degenerate:
            raise ValueError("map is not constant")
        # a != 0 here: a = 0 would force b = 0, rejected at construction.
        return ExtPoint(self.b / self.a)

    def apply(self, x) -> ExtPoint:
        return self.matrix().apply(x)

    def deriv_abs(self, x):
        return self.matrix().deriv_abs(x)

    def pole(self) -> "ExtPoint | None":
        return self.matrix().pole()

    def admissible_on(self, base: Interval) -> bool:
        """True when psi has no pole strictly inside the interval, so the
        image of the interval is again an interval (endpoint poles are fine
        and produce an unbounded image)."""
        p = self.pole()
        return p is None or not base.interior_contains(p)

    def coefficients(self) -> tuple[Fraction, Fraction, Fraction]:
        return (self.a, self.b, self.d)

    def __repr__(self) -> str:
        return f"ConjugacyMap({self.a}, {self.b}, {self.d})"

    def __str__(self) -> str:
        if self.degenerate:
            return f"psi == {self.constant_point()} (constant)"
        return f"psi(t) = ({self.b} + {self.d}*t)/({self.a} + {self.b}*t)"

    def to_json(self) -> dict:
        return {"a": str(self.a), "b": str(self.b), "d": str(self.d)}


def _nullspace(rows: Sequence[Sequence[Fraction]]) -> list[tuple[Fraction, ...]]:
    """Basis of the rational nullspace of the given row vectors."""
    if not rows:
        raise ValueError("no rows")
    n = len(rows[0])
    work = [list(r) for r in rows]
    pivots: list[int] = []
    r = 0
    for col in range(n):
        pivot_row = next((i for i in range(r, len(work)) if work[i][col] != 0),
                         None)
        if pivot_row is None:
            continue
        work[r], work[pivot_row] = work[pivot_row], work[r]
        inv = 1 / work[r][col]
        work[r] = [v * inv for v in work[r]]
        for i in range(len(work)):
            if i != r and work[i][col] != 0:
                f = work[i][col]
                work[i] = [v - f * p for v, p in zip(work[i], work[r])]
        pivots.append(col)
        r += 1
        if r == len(work):
            break
    free = [c for c in range(n) if c not in pivots]
    basis = []
    for f_col in free:
        vec = [Fraction(0)] * n
        vec[f_col] = Fraction(1)
        for row_i, p_col in enumerate(pivots):
            vec[p_col] = -work[row_i][f_col]
        basis.append(tuple(vec))
    return basis


def _normalize_vector(vec: Sequence[Fraction]) -> tuple[Fraction, ...]:
    import math

    num = math.gcd(*(v.numerator for v in vec))
    den = math.lcm(*(v.denominator for v in vec))
    scale = Fraction(den, num) if num else Fraction(1)
    out = [v * scale for v in vec]
    for v in out:
        if v != 0:
            if v < 0:
                out = [-w for w in out]
            break
    return tuple(out)


def solve_conjugacy(system: MoebiusSystem) -> "ConjugacyMap | None":
    """Solve the per-branch linear conditions a*b_k + b*(d_k - a_k) - d*c_k
    = 0 for the symmetric coefficient triple (a, b, d).

    Returns a normalized nontrivial solution when one exists, preferring a
    non-constant map if the solution space offers a choice; None when only
    the trivial solution remains.  (The sign-flipped variant of the
    conjugacy equation would force the square of the map to be the identity
    on an interval, so only the +1 variant is solved.)
    """
    rows = [
        [br.matrix.b, br.matrix.d - br.matrix.a, -br.matrix.c]
        for br in system.branches
    ]
    basis = _nullspace(rows)
    candidates = []
    for vec in basis:
        a, b, d = vec
        if a == 0 and b == 0:
            continue
        candidates.append(ConjugacyMap(*_normalize_vector(vec)))
    if not candidates:
        return None
    for cand in candidates:
        if not cand.degenerate:
            return cand
    return candidates[0]


def order_filter(psi: "ConjugacyMap | None") -> set[str]:
    """Dual piece arrangements compatible with a conjugacy: the identity
    arrangement when psi is increasing, the reversed one when decreasing.
    A constant (or absent) psi constrains nothing and yields the empty set.
    """
    if psi is None or psi.degenerate:
        return set()
    return {"lmn"} if psi.direction > 0 else {"nml"}


# -- scalar conditions for the 3-branch family -----------------------------


def dual_link_determinant(system: MoebiusSystem) -> Fraction:
    """det of the 3x3 matrix with rows (b_k, d_k - a_k, c_k).

    Vanishes exactly when the conjugacy conditions admit a nontrivial
    solution, i.e. when a differentiably isomorphic dual exists.
    """
    if system.branch_count != 3:
        raise ValueError(
            f"needs exactly 3 branches, got {system.branch_count}")
    r = [
        (br.matrix.b, br.matrix.d - br.matrix.a, br.matrix.c)
        for br in system.branches
    ]
    return (r[0][0] * (r[1][1] * r[2][2] - r[1][2] * r[2][1])
            - r[0][1] * (r[1][0] * r[2][2] - r[1][2] * r[2][0])
            + r[0][2] * (r[1][0] * r[2][1] - r[1][1] * r[2][0]))


_TYPE_CONDITIONS: dict[tuple[int, int, int], Callable] = {
    (1, 1, 1): lambda l, m, n: 2 * l * m + 2 * m - l * n - l,
    (1, 1, -1): lambda l, m, n: l * m + m - l * n - l - n,
    (1, -1, -1): lambda l, m, n: 2 * l * n + l + 2 * n - m,
    (1, -1, 1): lambda l, m, n: l * n - m,
    (-1, 1, -1): lambda l, m, n: 2 * l * m + m - 2 * l * n - l,
    (-1, 1, 1): lambda l, m, n: 4 * m * l + m * n + m - l * n - l,
    (-1, -1, 1): lambda l, m, n: 2 * l * n - 2 * l * m - m * n - m,
    (-1, -1, -1): lambda l, m, n: 4 * l * n + l + n - m * n - l * m - m,
}


def type_condition_residual(stype: SystemType, params: ParamTriple) -> Fraction:
    """Left minus right side of the type's differentiable-dual condition;
    zero exactly on the parameter surface where the conjugacy exists."""
    return _TYPE_CONDITIONS[stype.signs](*params.as_tuple())


_MU_SOLUTIONS: dict[tuple[int, int, int], Callable] = {
    (1, 1, 1): lambda l, n: l * (n + 1) / (2 * (l + 1)),
    (1, 1, -1): lambda l, n: (l * n + l + n) / (l + 1),
    (1, -1, -1): lambda l, n: 2 * l * n + l + 2 * n,
    (1, -1, 1): lambda l, n: l * n,
    (-1, 1, -1): lambda l, n: l * (2 * n + 1) / (2 * l + 1),
    (-1, 1, 1): lambda l, n: l * (n + 1) / (4 * l + n + 1),
    (-1, -1, 1): lambda l, n: 2 * l * n / (2 * l + n + 1),
    (-1, -1, -1): lambda l, n: (4 * l * n + l + n) / (l + n + 1),
}


def condition_param_mu(stype: SystemType, lam, nu) -> Fraction:
    """The middle parameter that puts (lam, mu, nu) on the type's condition
    surface; positive whenever lam and nu are."""
    return _MU_SOLUTIONS[stype.signs](as_fraction(lam), as_fraction(nu))


# -- conjugacy-image duals -------------------------------------------------


def dual_from_conjugacy(system: MoebiusSystem,
                        psi: ConjugacyMap) -> MoebiusSystem:
    """Dual system as the psi-image of the original: base psi(B), pieces
    psi(J_k), matrices transposed.  Works for any finite branch count; the
    piece layout comes out reversed when psi is decreasing."""
    if psi.degenerate:
        raise ValueError("constant conjugacy has no interval dual")
    if not psi.admissible_on(system.base):
        raise ValueError(
            f"conjugacy pole {psi.pole()} interior to {system.base}")
    m = psi.matrix()
    base = m.apply_interval(system.base)
    pieces = [
        Branch(br.matrix.transpose(), m.apply_interval(br.domain),
               label=br.label)
        for br in system.branches
    ]
    if psi.direction < 0:
        pieces.reverse()
    meta = {"family": "dual-conjugate",
            "direction": "decreasing" if psi.direction < 0 else "increasing"}
    return MoebiusSystem(base, pieces, meta=meta)


# -- the endpoint-constraint dual solver -----------------------------------


@dataclass
class DualWitness:
    """One admissible dual found by the endpoint solver."""

    dual: MoebiusSystem
    order: str
    endpoints: list[ExtPoint]
    endpoint_sources: list[str]
    classification: str  # "natural" or "exceptional"
    psi: "ConjugacyMap | None" = None

    def to_json(self) -> dict:
        from .exactnum import scalar_to_json

        return {
            "order": self.order,
            "endpoints": [scalar_to_json(e) for e in self.endpoints],
            "endpoint_sources": self.endpoint_sources,
            "classification": self.classification,
            "psi": self.psi.to_json() if self.psi else None,
            "dual": self.dual.to_json(),
        }


@dataclass
class DualReport:
    outcome: str  # "NaturalDifferentiable" | "Exceptional" | "Infeasible"
    requested_order: str
    witnesses: list[DualWitness] = field(default_factory=list)
    rejected: list[str] = field(default_factory=list)
    reason: "str | None" = None

    @property
    def ok(self) -> bool:
        return self.outcome != "Infeasible"

    def best(self) -> DualWitness:
        if not self.witnesses:
            raise ValueError(f"no dual: {self.reason}")
        for w in self.witnesses:
            if w.classification == "natural":
                return w
        return self.witnesses[0]

    def to_json(self) -> dict:
        return {
            "outcome": self.outcome,
            "requested_order": self.requested_order,
            "witnesses": [w.to_json() for w in self.witnesses],
            "rejected": self.rejected,
            "reason": self.reason,
        }


def _chain_shape(points: list[ExtPoint]) -> "str | None":
    ascending = all(points[i] < points[i + 1] for i in range(3))
    if ascending:
        return "ascending"
    descending = all(points[i] > points[i + 1] for i in range(3))
    if descending:
        return "descending"
    return None


def _kernel_nonnegative(base: Interval, lo: ExtPoint, hi: ExtPoint) -> bool:
    # 1 + x*y on the product box is affine in each variable, so checking
    # the finite corners (allowing boundary zeros) plus the sign condition
    # for an unbounded dual end settles positivity on the open interior.
    xs = [base.lo, base.hi]
    for x in xs:
        if x.is_infinite:
            continue
        for y in (lo, hi):
            if y.is_infinite:
                continue
            v = 1 + x.finite() * y.finite()
            if v.sign() < 0:
                return False
    if hi.is_infinite and base.lo.finite().sign() < 0:
        return False
    if base.hi.is_infinite and lo.finite().sign() < 0:
        return False
    return True


def _psi_matches_dual(system: MoebiusSystem, psi: ConjugacyMap,
                      dual: MoebiusSystem) -> bool:
    pm = psi.matrix()
    for br in system.branches:
        if not projectively_equal(pm.compose(br.matrix),
                                  br.matrix.transpose().compose(pm)):
            return False
    img = [psi.apply(system.base.lo), psi.apply(system.base.hi)]
    ends = [dual.base.lo, dual.base.hi]
    return ((img[0] == ends[0] and img[1] == ends[1])
            or (img[0] == ends[1] and img[1] == ends[0]))


def construct_dual(system: MoebiusSystem, order: str) -> DualReport:
    """Solve the dual boundary equations for one candidate arrangement.

    The inverse dual branches are the inverted transposed branch matrices.
    Writing the dual partition as e0 <= e1 <= e2 <= e3 with piece j carried
    by the arrangement's j-th branch, the two outer pieces pin e0 and e3
    (fixed points of a single inverse branch, an endpoint image, or a fixed
    point of a two-branch composition, depending on the outer orientations),
    the inner points follow as endpoint images, and the middle branch must
    reproduce both inner points.  Every root combination is tested; the
    report carries all admissible duals or the collected rejection reasons.

    A strictly descending solution chain is the mirrored arrangement read
    right to left and is returned with the reversed order string.
    """
    _check_order(order)
    if system.branch_count != 3:
        raise ValueError(
            f"dual construction needs 3 branches, got {system.branch_count}")
    for k, br in enumerate(system.branches):
        if br.matrix.is_degenerate:
            raise ValueError(f"branch {k} has zero determinant")

    perm = [_LABEL_INDEX[ch] for ch in order]
    first, mid, last = perm
    V = [br.matrix.inverse().transpose() for br in system.branches]
    eps = [br.orientation for br in system.branches]

    rejected: list[str] = []
    combos: list[tuple[ExtPoint, ExtPoint, str, str]] = []

    def fixed(k: int, role: str) -> list[tuple[ExtPoint, str]]:
        try:
            pts = V[k].fixed_points()
        except ValueError:
            rejected.append(f"{role} inverse branch is the identity")
            return []
        if not pts:
            rejected.append(f"{role} inverse branch has no real fixed point")
        return [(t, f"fixed point of inverse branch {k}") for t in pts]

    if eps[first] > 0 and eps[last] > 0:
        for e0, s0 in fixed(first, "leading"):
            for e3, s3 in fixed(last, "trailing"):
                combos.append((e0, e3, s0, s3))
    elif eps[first] > 0 and eps[last] < 0:
        for e0, s0 in fixed(first, "leading"):
            combos.append((e0, V[last].apply(e0), s0,
                           f"image of the opposite end under inverse branch {last}"))
    elif eps[first] < 0 and eps[last] > 0:
        for e3, s3 in fixed(last, "trailing"):
            combos.append((V[first].apply(e3), e3,
                           f"image of the opposite end under inverse branch {first}",
                           s3))
    else:
        comp = V[first].compose(V[last])
        try:
            roots = comp.fixed_points()
        except ValueError:
            roots = []
            rejected.append("outer inverse-branch composition is the identity")
        if not roots:
            rejected.append(
                "outer inverse-branch composition has no real fixed point")
        for e0 in roots:
            combos.append((e0, V[last].apply(e0),
                           f"fixed point of inverse branches {first} after {last}",
                           f"image of the opposite end under inverse branch {last}"))

    psi = solve_conjugacy(system)
    witnesses: list[DualWitness] = []
    seen: list[list[ExtPoint]] = []

    for e0, e3, src0, src3 in combos:
        e1 = V[first].apply(e3 if eps[first] > 0 else e0)
        e2 = V[last].apply(e0 if eps[last] > 0 else e3)
        src1 = (f"image of the {'far' if eps[first] > 0 else 'near'} end "
                f"under inverse branch {first}")
        src2 = (f"image of the {'near' if eps[last] > 0 else 'far'} end "
                f"under inverse branch {last}")
        chain = [e0, e1, e2, e3]

        if eps[mid] > 0:
            consistent = (V[mid].apply(e0) == e1 and V[mid].apply(e3) == e2)
        else:
            consistent = (V[mid].apply(e0) == e2 and V[mid].apply(e3) == e1)
        if not consistent:
            rejected.append(
                "middle branch cannot reproduce the inner endpoints "
                f"(chain {', '.join(str(p) for p in chain)})")
            continue

        shape = _chain_shape(chain)
        if shape is None:
            rejected.append(
                f"endpoint chain not strictly monotone "
                f"({', '.join(str(p) for p in chain)})")
            continue
        if shape == "ascending":
            pts = chain
            srcs = [src0, src1, src2, src3]
            piece_owner = perm
            realized = order
        else:
            pts = chain[::-1]
            srcs = [src3, src2, src1, src0]
            piece_owner = perm[::-1]
            realized = mirror_order(order)
        if any(p.is_infinite for p in pts[:3]):
            rejected.append(
                f"interior endpoint at infinity "
                f"({', '.join(str(p) for p in pts)})")
            continue
        if any(all(a == b for a, b in zip(pts, old)) for old in seen):
            continue
        seen.append(pts)

        if not _kernel_nonnegative(system.base, pts[0], pts[3]):
            rejected.append(
                f"density kernel changes sign on the product box "
                f"(ends {pts[0]}, {pts[3]})")
            continue

        dual_base = Interval(pts[0], pts[3])
        pieces = []
        for j in range(3):
            dom = Interval(pts[j], pts[j + 1],
                           lo_closed=True, hi_closed=(j == 2))
            k = piece_owner[j]
            pieces.append(Branch(system.branches[k].matrix.transpose(), dom,
                                 label=f"branch {k}"))
        dual = MoebiusSystem(dual_base, pieces,
                             meta={"family": "dual3", "order": realized})
        report = validate_system(dual)
        if not report.ok:
            rejected.append(
                "candidate dual fails validation: "
                + "; ".join(report.findings))
            continue

        classification = "exceptional"
        wpsi = None
        if (psi is not None and not psi.degenerate
                and psi.admissible_on(system.base)
                and _psi_matches_dual(system, psi, dual)):
            classification = "natural"
            wpsi = psi
        witnesses.append(DualWitness(dual, realized, pts, srcs,
                                     classification, wpsi))

    if witnesses:
        outcome = ("NaturalDifferentiable"
                   if any(w.classification == "natural" for w in witnesses)
                   else "Exceptional")
        return DualReport(outcome, order, witnesses, rejected)
    reason = "; ".join(dict.fromkeys(rejected)) if rejected else \
        "no endpoint combination to test"
    return DualReport("Infeasible", order, [], rejected, reason)


# -- tabulated exceptional-dual conditions ---------------------------------


@dataclass
class ExceptionalOutcome:
    kind: str  # "tabulated" | "infeasible" | "not_tabulated"
    lhs: "Fraction | None" = None
    rhs: "Fraction | None" = None
    reason: "str | None" = None

    @property
    def residual(self) -> Fraction:
        if self.kind != "tabulated":
            raise ValueError(f"no residual for a {self.kind} case")
        return self.lhs - self.rhs


_EXCEPTIONAL_TABLE: dict[tuple[tuple[int, int, int], str], Callable] = {
    ((1, 1, -1), "lnm"): lambda l, m, n: (n, m * l),
    ((1, 1, 1), "lnm"): lambda l, m, n: (
        2 * l * m * n + 2 * m * n + l * n + n,
        n * n + 2 * m * l + m * l * l + m),
    ((1, -1, -1), "lnm"): lambda l, m, n: (
        m * m * l + m * l * l + m * l,
        2 * n * m * l + n * l * l + 2 * n * m + 2 * l * n + n),
    ((1, -1, 1), "lnm"): lambda l, m, n: (n, l + m + 1),
    ((1, -1, 1), "mln"): lambda l, m, n: (l * (n + m + m * n), m * n),
}

_EXCEPTIONAL_INFEASIBLE: dict[tuple[tuple[int, int, int], str], str] = {
    ((1, 1, 1), "nlm"):
        "boundary equations force the product of the second and third "
        "parameters to vanish",
    ((1, -1, -1), "nlm"):
        "boundary equations force the product of all three parameters "
        "to vanish",
    ((1, 1, -1), "mln"):
        "boundary equations force a sum of positive parameter terms "
        "to vanish",
}


def exceptional_condition(stype: SystemType, order: str,
                          params: ParamTriple) -> ExceptionalOutcome:
    """Closed-form existence conditions for duals in conjugacy-incompatible
    arrangements, where known.

    Mirrored arrangements share their condition.  Pairs without a worked
    closed form return kind "not_tabulated"; the endpoint solver remains
    authoritative for those.
    """
    _check_order(order)
    keys = ((stype.signs, order), (stype.signs, mirror_order(order)))
    for key in keys:
        if key in _EXCEPTIONAL_INFEASIBLE:
            return ExceptionalOutcome("infeasible",
                                      reason=_EXCEPTIONAL_INFEASIBLE[key])
    for key in keys:
        if key in _EXCEPTIONAL_TABLE:
            lhs, rhs = _EXCEPTIONAL_TABLE[key](*params.as_tuple())
            return ExceptionalOutcome("tabulated", lhs=lhs, rhs=rhs)
    return ExceptionalOutcome("not_tabulated")


# -- conjugacy obstruction for word matrices -------------------------------


@dataclass
class SolutionSpace:
    dimension: int
    basis: list[tuple[Fraction, Fraction, Fraction]]


def symmetric_conjugacy_space(m1: MoebiusMatrix,
                              m2: MoebiusMatrix) -> dict[int, SolutionSpace]:
    """Solve S*M1 = rho*M2*S for symmetric S = (a, b; b, d), rho = +1, -1.

    Returns the solution space per sign.  Dimension 0 for both signs
    certifies that no fractional-linear change of variable with symmetric
    coefficient matrix intertwines the two maps.
    """
    if m1.is_degenerate or m2.is_degenerate:
        raise ValueError("word matrices must be nondegenerate")
    out: dict[int, SolutionSpace] = {}
    for rho in (1, -1):
        rows = [
            [m1.a - rho * m2.a, m1.c - rho * m2.b, Fraction(0)],
            [m1.b, m1.d - rho * m2.a, -rho * m2.b],
            [-rho * m2.c, m1.a - rho * m2.d, m1.c],
            [Fraction(0), m1.b - rho * m2.c, m1.d - rho * m2.d],
        ]
        basis = [_normalize_vector(v) for v in _nullspace(rows)]
        out[rho] = SolutionSpace(len(basis), [tuple(v) for v in basis])
    return out
