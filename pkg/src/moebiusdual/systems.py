"""Piecewise fractional-linear interval maps and their validation.

A system is an interval together with ordered branches whose domains
partition it, each branch a fractional-linear bijection onto the whole
interval.  This module provides the parameterized 3-branch family on [0,1]
(partition 0 < 1/2 < 2/3 < 1, one increasing/decreasing choice per branch),
the classical canonical examples, structural validation, exact evaluation,
and a fast floating-point orbit histogram for empirical density checks.

Countable systems (the continued-fraction map) are materialized up to a
truncation index and carry a tail descriptor so downstream residual checks
can budget the omitted branches.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .exactnum import (
    ExtPoint,
    Interval,
    as_fraction,
    as_point,
    scalar_from_json,
)
from .moebius import MoebiusMatrix

__all__ = [
    "SystemType",
    "ParamTriple",
    "Branch",
    "TruncationTail",
    "MoebiusSystem",
    "ValidationReport",
    "DescriptorError",
    "build_standard_system",
    "canonical_example",
    "CANONICAL_NAMES",
    "validate_system",
    "evaluate_map",
    "Histogram",
    "orbit_histogram",
    "system_to_json",
    "system_from_json",
]


@dataclass(frozen=True)
class SystemType:
    """Monotonicity pattern of the three branches: +1 rising, -1 falling."""

    eps1: int
    eps2: int
    eps3: int

    def __post_init__(self):
        for e in (self.eps1, self.eps2, self.eps3):
            if e not in (1, -1):
                raise ValueError(f"branch sign must be +1 or -1, got {e}")

    @property
    def signs(self) -> tuple[int, int, int]:
        return (self.eps1, self.eps2, self.eps3)

    @classmethod
    def parse(cls, text: str) -> "SystemType":
        parts = [p.strip() for p in text.split(",")]
        if len(parts) != 3:
            raise ValueError(f"expected three signs, got {text!r}")
        return cls(*(int(p) for p in parts))

    def __str__(self) -> str:
        return "({}, {}, {})".format(*self.signs)


@dataclass(frozen=True)
class ParamTriple:
    """The three positive branch expansion parameters."""

    lam: Fraction
    mu: Fraction
    nu: Fraction

    def __post_init__(self):
        object.__setattr__(self, "lam", as_fraction(self.lam))
        object.__setattr__(self, "mu", as_fraction(self.mu))
        object.__setattr__(self, "nu", as_fraction(self.nu))
        for name, v in zip(("first", "second", "third"), self.as_tuple()):
            if v <= 0:
                raise ValueError(f"{name} parameter must be positive, got {v}")

    def as_tuple(self) -> tuple[Fraction, Fraction, Fraction]:
        return (self.lam, self.mu, self.nu)

    @classmethod
    def parse(cls, text: str) -> "ParamTriple":
        parts = [p.strip() for p in text.split(",")]
        if len(parts) != 3:
            raise ValueError(f"expected three parameters, got {text!r}")
        return cls(*(Fraction(p) for p in parts))

    def __str__(self) -> str:
        return "({}, {}, {})".format(*self.as_tuple())


class Branch:
    """One piece of a system: a matrix restricted to a domain interval."""

    __slots__ = ("matrix", "domain", "label")

    def __init__(self, matrix: MoebiusMatrix, domain: Interval,
                 label: "str | None" = None):
        self.matrix = matrix
        self.domain = domain
        self.label = label

    @property
    def orientation(self) -> int:
        d = self.matrix.det()
        return 1 if d > 0 else (-1 if d < 0 else 0)

    def apply(self, x) -> ExtPoint:
        return self.matrix.apply(x)

    def inverse_matrix(self) -> MoebiusMatrix:
        return self.matrix.inverse()

    def __repr__(self) -> str:
        tag = f", label={self.label!r}" if self.label else ""
        return f"Branch({self.matrix!r}, {self.domain}{tag})"


@dataclass
class TruncationTail:
    """Budget data for the branches a countable system omits.

    ``weight_bound(x)`` bounds the summed derivative weights of all omitted
    inverse branches at x; ``gap`` is the part of the base interval the
    materialized branches do not cover.
    """

    description: str
    weight_bound: Callable[[float], float]
    gap: "Interval | None" = None


class MoebiusSystem:
    """Interval plus ordered branches partitioning it."""

    def __init__(self, base: Interval, branches: Sequence[Branch],
                 meta: "dict | None" = None,
                 tail: "TruncationTail | None" = None):
        if not branches:
            raise ValueError("system needs at least one branch")
        self.base = base
        self.branches = list(branches)
        self.meta = dict(meta) if meta else {}
        self.tail = tail
        self._arrays: dict = {}

    @property
    def branch_count(self) -> int:
        return len(self.branches)

    def validate(self) -> "ValidationReport":
        return validate_system(self)

    def evaluate(self, x) -> tuple[ExtPoint, int]:
        return evaluate_map(self, x)

    # -- floating-point views (built once, reused by hot loops) ------------

    def branch_arrays(self, dtype=np.float64):
        """(lefts, a, b, c, d) arrays of the branch matrices, in domain order.

        ``lefts`` holds each domain's lower endpoint for bisect dispatch.
        """
        key = ("fwd", np.dtype(dtype).name)
        if key not in self._arrays:
            lefts = np.array([b.domain.lo_float() for b in self.branches],
                             dtype=np.float64)
            cols = [np.array([float(getattr(b.matrix, name))
                              for b in self.branches], dtype=dtype)
                    for name in ("a", "b", "c", "d")]
            self._arrays[key] = (lefts, *cols)
        return self._arrays[key]

    def inverse_arrays(self, dtype=np.float64):
        """Entry arrays of the inverse-branch matrices, same order."""
        key = ("inv", np.dtype(dtype).name)
        if key not in self._arrays:
            invs = [b.inverse_matrix() for b in self.branches]
            cols = [np.array([float(getattr(m, name)) for m in invs],
                             dtype=dtype)
                    for name in ("a", "b", "c", "d")]
            self._arrays[key] = tuple(cols)
        return self._arrays[key]

    def to_json(self) -> dict:
        return system_to_json(self)

    def __repr__(self) -> str:
        fam = self.meta.get("family")
        tag = f" {fam}" if fam else ""
        return (f"<MoebiusSystem{tag} on {self.base} "
                f"with {self.branch_count} branches>")


@dataclass
class ValidationReport:
    ok: bool
    findings: list[str] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    def __str__(self) -> str:
        lines = ["pass" if self.ok else "FAIL"]
        lines += [f"  finding: {f}" for f in self.findings]
        lines += [f"  note: {n}" for n in self.notes]
        return "\n".join(lines)


# -- the parameterized 3-branch family -------------------------------------

_HALF = Fraction(1, 2)
_TWO_THIRDS = Fraction(2, 3)


def _standard_matrix(position: int, sign: int, p: Fraction) -> MoebiusMatrix:
    # One tabulated matrix per (branch position, orientation); the branch's
    # signed determinant equals the parameter.
    if position == 0:
        if sign > 0:
            return MoebiusMatrix(p, 1 - 2 * p, 0, 1)
        return MoebiusMatrix(-1, 2 - p, -1, 2)
    if position == 1:
        if sign > 0:
            return MoebiusMatrix(2 * p - 1, 2 - 3 * p, -1, 2)
        return MoebiusMatrix(p - 2, 3 - 2 * p, -2, 3)
    if position == 2:
        if sign > 0:
            return MoebiusMatrix(p - 2, 3 - p, -2, 3)
        return MoebiusMatrix(2 * p - 1, 1 - 3 * p, -1, 1)
    raise ValueError(f"branch position out of range: {position}")


def build_standard_system(stype: SystemType,
                          params: ParamTriple) -> MoebiusSystem:
    """The 3-branch family on [0,1] with partition 0 < 1/2 < 2/3 < 1.

    Branch k is increasing or decreasing per the type's k-th sign, and its
    signed determinant equals the k-th parameter exactly.
    """
    cuts = [Fraction(0), _HALF, _TWO_THIRDS, Fraction(1)]
    branches = []
    for k, (sign, p) in enumerate(zip(stype.signs, params.as_tuple())):
        domain = Interval(cuts[k], cuts[k + 1],
                          lo_closed=True, hi_closed=(k == 2))
        branches.append(Branch(_standard_matrix(k, sign, p), domain))
    base = Interval(Fraction(0), Fraction(1))
    meta = {
        "family": "standard3",
        "type": list(stype.signs),
        "params": [str(v) for v in params.as_tuple()],
    }
    return MoebiusSystem(base, branches, meta=meta)


# -- canonical examples ----------------------------------------------------

CANONICAL_NAMES = ("gadic", "rcf", "renyi", "comb")


def _gadic(g: int) -> MoebiusSystem:
    if g < 2:
        raise ValueError(f"base must be at least 2, got {g}")
    base = Interval(Fraction(0), Fraction(1))
    branches = [
        Branch(MoebiusMatrix(1, 0, -k, g),
               Interval(Fraction(k, g), Fraction(k + 1, g),
                        lo_closed=True, hi_closed=(k == g - 1)),
               label=str(k))
        for k in range(g)
    ]
    return MoebiusSystem(base, branches, meta={"family": "gadic", "g": g})


def _rcf(K: int) -> MoebiusSystem:
    """Continued-fraction map x -> 1/x - k, materialized for digits 1..K.

    The slice [0, 1/(K+1)[ of the base stays uncovered; the tail descriptor
    bounds the omitted inverse-branch weights by sum_{k>K} 1/(k+x)^2
    <= 1/(K+x).
    """
    if K < 1:
        raise ValueError(f"truncation must be at least 1, got {K}")
    base = Interval(Fraction(0), Fraction(1))
    branches = [
        Branch(MoebiusMatrix(0, 1, 1, -k),
               Interval(Fraction(1, k + 1), Fraction(1, k),
                        lo_closed=True, hi_closed=(k == 1)),
               label=str(k))
        for k in range(K, 0, -1)
    ]
    tail = TruncationTail(
        description=f"digits above {K}: weight sum <= 1/({K}+x)",
        weight_bound=lambda x, _K=K: 1.0 / (_K + x),
        gap=Interval(Fraction(0), Fraction(1, K + 1),
                     lo_closed=True, hi_closed=False),
    )
    return MoebiusSystem(base, branches,
                         meta={"family": "rcf", "truncation": K}, tail=tail)


def _renyi() -> MoebiusSystem:
    # Domains follow the classical statement: the rising piece keeps its
    # right endpoint, the falling piece opens at 1/2 and closes at 1.
    base = Interval(Fraction(0), Fraction(1))
    branches = [
        Branch(MoebiusMatrix(1, -1, 0, 1),
               Interval(Fraction(0), _HALF, lo_closed=True, hi_closed=True)),
        Branch(MoebiusMatrix(0, 1, 1, -1),
               Interval(_HALF, Fraction(1), lo_closed=False, hi_closed=True)),
    ]
    return MoebiusSystem(base, branches, meta={"family": "renyi"})


def _comb() -> MoebiusSystem:
    """Three branches on [0,1] whose dual set is the union of ]2k, 2k+1]."""
    base = Interval(Fraction(0), Fraction(1))
    third = Fraction(1, 3)
    branches = [
        Branch(MoebiusMatrix(1, -2, 0, 1),
               Interval(Fraction(0), third, lo_closed=True, hi_closed=False)),
        Branch(MoebiusMatrix(0, 1, 1, -2),
               Interval(third, _HALF, lo_closed=True, hi_closed=False)),
        Branch(MoebiusMatrix(0, 1, 1, -1),
               Interval(_HALF, Fraction(1), lo_closed=True, hi_closed=True)),
    ]
    return MoebiusSystem(base, branches, meta={"family": "comb"})


def canonical_example(name: str, g: int = 2,
                      truncation: "int | None" = None) -> MoebiusSystem:
    """Named classical systems: gadic(g), rcf(K), renyi, comb."""
    if name == "gadic":
        return _gadic(g)
    if name == "rcf":
        return _rcf(truncation if truncation is not None else 100)
    if name == "renyi":
        return _renyi()
    if name == "comb":
        return _comb()
    raise ValueError(
        f"unknown example {name!r}; choose from {', '.join(CANONICAL_NAMES)}")


# -- validation ------------------------------------------------------------

def _check_partition(system: MoebiusSystem, report: ValidationReport) -> None:
    base = system.base
    branches = system.branches
    for i in range(1, len(branches)):
        if not branches[i - 1].domain.lo <= branches[i].domain.lo:
            report.findings.append(
                f"branches {i - 1} and {i} out of order by domain")
            return
    first, last = branches[0].domain, branches[-1].domain
    if first.lo != base.lo:
        if system.tail is not None and system.tail.gap is not None:
            report.notes.append(
                f"uncovered initial slice [{base.lo}, {first.lo}[ "
                f"(documented truncation gap)")
        else:
            report.findings.append(
                f"partition starts at {first.lo}, base starts at {base.lo}")
    if last.hi != base.hi:
        report.findings.append(
            f"partition ends at {last.hi}, base ends at {base.hi}")
    if first.lo == base.lo and base.lo_closed and not first.lo_closed:
        report.notes.append(
            f"base left endpoint {base.lo} not owned by any branch")
    if (last.hi == base.hi and base.hi_closed and not last.hi_closed):
        report.notes.append(
            f"base right endpoint {base.hi} not owned by any branch")
    for i in range(1, len(branches)):
        prev, cur = branches[i - 1].domain, branches[i].domain
        if prev.hi != cur.lo:
            kind = "overlap" if prev.hi > cur.lo else "gap"
            report.findings.append(
                f"{kind} between branch {i - 1} (ends {prev.hi}) "
                f"and branch {i} (starts {cur.lo})")
        elif prev.hi_closed == cur.lo_closed:
            which = ("both own" if prev.hi_closed else "neither owns")
            report.findings.append(
                f"boundary point {cur.lo}: {which} it "
                f"(branches {i - 1}, {i})")


def _check_branch(k: int, branch: Branch, base: Interval,
                  report: ValidationReport) -> None:
    m = branch.matrix
    if m.is_degenerate:
        report.findings.append(f"branch {k}: zero determinant")
        return
    p = m.pole()
    if p is not None and branch.domain.interior_contains(p):
        report.findings.append(
            f"branch {k}: pole {p} interior to its domain")
        return
    img_lo = m.apply(branch.domain.lo)
    img_hi = m.apply(branch.domain.hi)
    rising = branch.orientation > 0
    expect_lo, expect_hi = ((base.lo, base.hi) if rising
                            else (base.hi, base.lo))
    if img_lo != expect_lo or img_hi != expect_hi:
        report.findings.append(
            f"branch {k}: endpoint images ({img_lo}, {img_hi}) do not map "
            f"the domain onto the base ({base.lo}, {base.hi}) with "
            f"orientation {branch.orientation:+d}")
        return

    try:
        fixed = m.fixed_points()
    except ValueError:
        # Identity branch: every point fixed with multiplier exactly 1.
        return
    for t in fixed:
        in_closure = (
            (t.is_infinite and branch.domain.hi.is_infinite)
            or (t.is_finite
                and branch.domain.lo <= t and t <= branch.domain.hi)
        )
        if not in_closure:
            continue
        mult = m.multiplier_at(t)
        if mult < 1:
            report.findings.append(
                f"branch {k}: attractive fixed point at {t} "
                f"(|derivative| = {mult} < 1)")


def validate_system(system: MoebiusSystem) -> ValidationReport:
    """Structural report: partition exactness, per-branch bijectivity onto
    the base, nonzero determinants, and no attractive fixed point inside a
    branch's closed domain.  Findings fail the report; notes do not.
    """
    report = ValidationReport(ok=True)
    _check_partition(system, report)
    for k, branch in enumerate(system.branches):
        _check_branch(k, branch, system.base, report)
    report.ok = not report.findings
    return report


# -- evaluation ------------------------------------------------------------

def evaluate_map(system: MoebiusSystem, x) -> tuple[ExtPoint, int]:
    """Exact one-step image and the 0-based index of the acting branch."""
    x = as_point(x)
    if not system.base.contains(x):
        raise ValueError(f"{x} outside the base interval {system.base}")
    for k, branch in enumerate(system.branches):
        if branch.domain.contains(x):
            return branch.apply(x), k
    raise ValueError(f"{x} not owned by any branch domain")


# -- orbit histogram -------------------------------------------------------

@dataclass
class Histogram:
    counts: np.ndarray
    edges: np.ndarray
    escapes: int
    n: int

    def frequencies(self) -> np.ndarray:
        if self.n == 0:
            return np.zeros_like(self.counts, dtype=np.float64)
        return self.counts.astype(np.float64) / self.n


def _orbit_loop_python(x0, n, lefts, a, b, c, d, lo, hi, bins, counts):
    x = x0
    escapes = 0
    width = hi - lo
    reseed = 0.6180339887498949
    lefts_list = lefts.tolist()
    for _ in range(n):
        idx = int((x - lo) / width * bins)
        if idx < 0:
            idx = 0
        elif idx >= bins:
            idx = bins - 1
        counts[idx] += 1
        j = bisect_right(lefts_list, x) - 1
        if j < 0:
            j = 0
        den = a[j] + b[j] * x
        x = (c[j] + d[j] * x) / den if den != 0.0 else math.inf
        if not (lo <= x <= hi):
            # Restart inside the base on a golden-step Weyl sequence; an
            # endpoint clamp can trap the orbit in a short artifact cycle
            # when an endpoint maps into an uncovered slice.
            escapes += 1
            reseed += 0.6180339887498949
            if reseed >= 1.0:
                reseed -= 1.0
            x = lo + width * reseed
    return escapes


_orbit_loop_numba = None


def _compiled_orbit_loop():
    global _orbit_loop_numba
    if _orbit_loop_numba is None:
        from numba import njit

        @njit(cache=True)
        def loop(x0, n, lefts, a, b, c, d, lo, hi, bins, counts):
            x = x0
            escapes = 0
            width = hi - lo
            reseed = 0.6180339887498949
            for _ in range(n):
                idx = int((x - lo) / width * bins)
                if idx < 0:
                    idx = 0
                elif idx >= bins:
                    idx = bins - 1
                counts[idx] += 1
                j = np.searchsorted(lefts, x, side="right") - 1
                if j < 0:
                    j = 0
                den = a[j] + b[j] * x
                if den != 0.0:
                    x = (c[j] + d[j] * x) / den
                else:
                    x = np.inf
                if not (lo <= x <= hi):
                    escapes += 1
                    reseed += 0.6180339887498949
                    if reseed >= 1.0:
                        reseed -= 1.0
                    x = lo + width * reseed
            return escapes

        _orbit_loop_numba = loop
    return _orbit_loop_numba


def orbit_histogram(system: MoebiusSystem, x0: float, n: int,
                    bins: int) -> Histogram:
    """Bin counts of the length-n forward orbit of x0, double precision.

    Iterates with the branch matrices converted once to floats; an iterate
    thrown out of the base interval by rounding (or by a truncated system's
    uncovered slice) is counted as an escape and the orbit restarts from a
    fresh interior point.
    """
    if not system.base.is_bounded:
        raise ValueError("orbit histogram needs a bounded base interval")
    if bins < 1:
        raise ValueError("bins must be positive")
    if n < 0:
        raise ValueError("iteration count must be nonnegative")
    lo, hi = system.base.lo_float(), system.base.hi_float()
    edges = np.linspace(lo, hi, bins + 1)
    counts = np.zeros(bins, dtype=np.int64)
    if n == 0:
        return Histogram(counts, edges, 0, 0)
    if not (lo <= x0 <= hi):
        raise ValueError(f"seed {x0} outside [{lo}, {hi}]")
    lefts, a, b, c, d = system.branch_arrays(np.float64)
    try:
        loop = _compiled_orbit_loop()
    except ImportError:
        loop = _orbit_loop_python
    escapes = loop(x0, n, lefts, a, b, c, d, lo, hi, bins, counts)
    return Histogram(counts, edges, int(escapes), n)


# -- descriptor serialization ----------------------------------------------

class DescriptorError(ValueError):
    """Malformed system descriptor; carries the offending field path."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


def system_to_json(system: MoebiusSystem) -> dict:
    obj = {
        "B": system.base.to_json(),
        "branches": [
            {"matrix": b.matrix.to_json(), "domain": b.domain.to_json(),
             **({"label": b.label} if b.label else {})}
            for b in system.branches
        ],
    }
    if system.meta:
        obj["meta"] = _meta_to_json(system.meta)
    return obj


def _meta_to_json(meta: dict) -> dict:
    out = {}
    for k, v in meta.items():
        if isinstance(v, (list, tuple)):
            out[k] = [str(e) if isinstance(e, Fraction) else e for e in v]
        elif isinstance(v, Fraction):
            out[k] = str(v)
        else:
            out[k] = v
    return out


def _parse_scalar(obj, path: str) -> ExtPoint:
    try:
        return scalar_from_json(obj)
    except (ValueError, TypeError, ZeroDivisionError) as exc:
        raise DescriptorError(path, str(exc)) from None


def _parse_interval(obj, path: str) -> Interval:
    if not isinstance(obj, dict):
        raise DescriptorError(path, "expected an interval object")
    for key in ("lo", "hi"):
        if key not in obj:
            raise DescriptorError(f"{path}.{key}", "missing")
    lo = _parse_scalar(obj["lo"], f"{path}.lo")
    hi = _parse_scalar(obj["hi"], f"{path}.hi")
    try:
        return Interval(lo, hi, bool(obj.get("lo_closed", True)),
                        bool(obj.get("hi_closed", True)))
    except ValueError as exc:
        raise DescriptorError(path, str(exc)) from None


def _parse_matrix(obj, path: str) -> MoebiusMatrix:
    if not isinstance(obj, dict):
        raise DescriptorError(path, "expected a matrix object")
    entries = []
    for key in ("a", "b", "c", "d"):
        if key not in obj:
            raise DescriptorError(f"{path}.{key}", "missing")
        try:
            entries.append(Fraction(str(obj[key])))
        except (ValueError, ZeroDivisionError) as exc:
            raise DescriptorError(f"{path}.{key}", str(exc)) from None
    return MoebiusMatrix(*entries)


def system_from_json(obj: dict) -> MoebiusSystem:
    """Parse a system descriptor, naming the offending field on failure.

    Structural parsing only; semantic checks live in validate_system.
    """
    if not isinstance(obj, dict):
        raise DescriptorError("$", "descriptor must be a JSON object")
    if "B" not in obj:
        raise DescriptorError("B", "missing")
    base = _parse_interval(obj["B"], "B")
    raw = obj.get("branches")
    if not isinstance(raw, list) or not raw:
        raise DescriptorError("branches", "expected a nonempty list")
    branches = []
    for i, item in enumerate(raw):
        path = f"branches[{i}]"
        if not isinstance(item, dict):
            raise DescriptorError(path, "expected an object")
        if "matrix" not in item:
            raise DescriptorError(f"{path}.matrix", "missing")
        if "domain" not in item:
            raise DescriptorError(f"{path}.domain", "missing")
        branches.append(Branch(
            _parse_matrix(item["matrix"], f"{path}.matrix"),
            _parse_interval(item["domain"], f"{path}.domain"),
            label=item.get("label"),
        ))
    meta = obj.get("meta") or {}
    if not isinstance(meta, dict):
        raise DescriptorError("meta", "expected an object")
    tail = None
    if meta.get("family") == "rcf" and "truncation" in meta:
        try:
            K = int(meta["truncation"])
        except (TypeError, ValueError):
            raise DescriptorError("meta.truncation", "expected an integer") from None
        tail = _rcf(K).tail
    return MoebiusSystem(base, branches, meta=meta, tail=tail)
