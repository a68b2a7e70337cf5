"""Command-line front end.

Subcommands:

* ``build``     write a 3-branch family descriptor from type and parameters
* ``example``   write a canonical system descriptor (gadic, rcf, renyi, comb)
* ``validate``  structural checks on a descriptor
* ``classify``  conjugacy diagnostics: link determinant, type residual,
                the conjugacy map, compatible dual orders, mass-point duals
* ``dual``      run the endpoint-constraint dual solver per order
* ``density``   dual set, closed-form density, CSV with pointwise residuals
* ``verify``    battery: validation, invariance residual, orbit histogram,
                conformal word sums; one pass/fail line per check
* ``sweep``     CSV over exact parameter ranges with per-order dual outcomes

Exit codes: 0 success, 1 a semantic check failed (validation finding, no
dual, a verify check failed), 2 usage errors and malformed descriptors.
Rational inputs accept "p/q" and decimal strings, both parsed exactly.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass
from fractions import Fraction

from .density import (
    DensityModel,
    DiracDensity,
    comb_dual_families,
    comb_series_density,
    compare_orbit_histogram,
    conformal_sum_check,
    density_from_dual,
    density_mass,
    dirac_dual_families,
    families_from_system,
    kuzmin_residual,
)
from .duality import (
    ORDERS,
    construct_dual,
    dual_from_conjugacy,
    dual_link_determinant,
    order_filter,
    solve_conjugacy,
    type_condition_residual,
)
from .systems import (
    CANONICAL_NAMES,
    DescriptorError,
    MoebiusSystem,
    ParamTriple,
    SystemType,
    build_standard_system,
    canonical_example,
    orbit_histogram,
    system_from_json,
    system_to_json,
    validate_system,
)

__all__ = ["main"]


def _dump_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _write_text(path: "str | None", text: str, force: bool = False) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    if os.path.exists(path) and not force:
        raise ValueError(f"{path} exists; pass --force to overwrite")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def _load_system(path: str) -> MoebiusSystem:
    with open(path, "r", encoding="utf-8") as fh:
        obj = json.load(fh)
    return system_from_json(obj)


def _parse_orders(text: str) -> list[str]:
    if text == "all":
        return list(ORDERS)
    orders = [p.strip() for p in text.split(",") if p.strip()]
    for o in orders:
        if o not in ORDERS:
            raise ValueError(
                f"unknown order {o!r}; choose from all, {', '.join(ORDERS)}")
    if not orders:
        raise ValueError("no orders given")
    return orders


def _parse_range(text: str) -> list[Fraction]:
    """A single exact value, or an inclusive a:b:step range."""
    parts = text.split(":")
    if len(parts) == 1:
        return [Fraction(parts[0])]
    if len(parts) != 3:
        raise ValueError(f"range must be value or a:b:step, got {text!r}")
    a, b, step = (Fraction(p) for p in parts)
    if step <= 0:
        raise ValueError("range step must be positive")
    out = []
    v = a
    while v <= b:
        out.append(v)
        v += step
    return out


def _parse_window(text: "str | None"):
    if text is None:
        return None
    parts = text.split(":")
    if len(parts) != 2:
        raise ValueError(f"window must be lo:hi, got {text!r}")
    return (Fraction(parts[0]), Fraction(parts[1]))


# -- dual selection policy -------------------------------------------------


@dataclass
class DualChoice:
    kind: str  # mass-point | endpoint-solver | conjugacy-image | family-series
    density: DensityModel
    dual: "MoebiusSystem | None"
    note: str
    families: object = None


# Teeth kept when a dual is an infinite series of intervals.
_SERIES_TERMS = 2000


def _find_dual(system: MoebiusSystem) -> "tuple[DualChoice | None, str]":
    """Pick a dual for a validated system.

    3-branch systems go through the endpoint solver over every order
    (preferring a conjugacy-compatible witness); a constant conjugacy gives
    the mass-point dual; any other nondegenerate conjugacy gives the image
    dual.  For truncated families the omitted branches' domains are folded
    back into the dual set, so the density belongs to the full family.
    """
    psi = solve_conjugacy(system)
    if psi is not None and psi.degenerate:
        pt = psi.constant_point()
        density = DiracDensity(pt, base=system.base)
        return (DualChoice("mass-point", density, None,
                           f"dual set collapses to the point {pt}"), "")

    if system.meta.get("family") == "comb":
        # The dual set here is an infinite union of unit teeth; no finite
        # chain of endpoints can carry it, so skip the endpoint solver.
        density = comb_series_density(_SERIES_TERMS)
        fams = comb_dual_families(_SERIES_TERMS)
        return (DualChoice("family-series", density, None,
                           f"interval-series dual, first {_SERIES_TERMS + 1} "
                           "teeth kept", families=fams), "")

    if system.branch_count == 3:
        reasons = []
        best = None
        for order in ORDERS:
            rep = construct_dual(system, order)
            if rep.witnesses:
                w = rep.best()
                if best is None or (w.classification == "natural"
                                    and best.classification != "natural"):
                    best = w
            else:
                reasons.append(f"{order}: {rep.reason}")
        if best is not None:
            density = density_from_dual(best, base=system.base)
            return (DualChoice("endpoint-solver", density, best.dual,
                               f"order {best.order}, "
                               f"{best.classification}"), "")
        return (None, "; ".join(reasons) or "no order admits a dual")

    if psi is not None and psi.admissible_on(system.base):
        dual = dual_from_conjugacy(system, psi)
        pieces = [br.domain for br in dual.branches]
        if system.tail is not None and system.tail.gap is not None:
            pieces.append(psi.matrix().apply_interval(system.tail.gap))
        density = density_from_dual(pieces, base=system.base)
        return (DualChoice("conjugacy-image", density, dual,
                           f"psi-image dual, {psi}"), "")
    return (None, "no conjugacy and no 3-branch endpoint search")


# -- subcommands -----------------------------------------------------------


def _cmd_build(args) -> int:
    stype = SystemType.parse(args.type)
    params = ParamTriple.parse(args.params)
    system = build_standard_system(stype, params)
    _write_text(args.out, _dump_json(system_to_json(system)), args.force)
    return 0


def _cmd_example(args) -> int:
    system = canonical_example(args.name, g=args.g,
                               truncation=args.truncation)
    _write_text(args.out, _dump_json(system_to_json(system)), args.force)
    return 0


def _cmd_validate(args) -> int:
    system = _load_system(args.file)
    report = validate_system(system)
    print(report)
    return 0 if report.ok else 1


def _cmd_classify(args) -> int:
    system = _load_system(args.file)
    report = validate_system(system)
    print(f"system: {system.branch_count} branches on {system.base}")
    print(report)
    if not report.ok:
        return 1

    if system.branch_count == 3:
        print(f"dual-link determinant: {dual_link_determinant(system)}")
    meta = system.meta
    if meta.get("family") == "standard3":
        stype = SystemType(*meta["type"])
        params = ParamTriple(*(Fraction(p) for p in meta["params"]))
        res = type_condition_residual(stype, params)
        print(f"type condition residual {stype}: {res}")

    psi = solve_conjugacy(system)
    if psi is None:
        print("conjugacy: none (only the trivial solution)")
    elif psi.degenerate:
        pt = psi.constant_point()
        print(f"conjugacy: constant, {psi}")
        if pt == 0:
            print(f"Dirac dual at {pt}, h = 1")
        else:
            print(f"Dirac dual at {pt}, h(x) = 1/(1 + {pt}*x)^2")
    else:
        print(f"conjugacy: {psi}")
        orders = ",".join(sorted(order_filter(psi)))
        print(f"conjugacy-compatible dual orders: {orders}")
    return 0


def _cmd_dual(args) -> int:
    system = _load_system(args.file)
    if system.branch_count != 3:
        raise ValueError(
            "the dual solver needs a 3-branch system; try classify")
    reports = []
    found = False
    for order in _parse_orders(args.orders):
        rep = construct_dual(system, order)
        reports.append(rep)
        print(f"order {order}: {rep.outcome}")
        for w in rep.witnesses:
            ends = ", ".join(str(e) for e in w.endpoints)
            print(f"  dual on [{w.endpoints[0]}, {w.endpoints[3]}] "
                  f"(chain {ends}; realized order {w.order}; "
                  f"{w.classification})")
            found = True
        if not rep.witnesses and rep.reason:
            print(f"  {rep.reason}")
    if args.out:
        _write_text(args.out, _dump_json([r.to_json() for r in reports]),
                    args.force)
    return 0 if found else 1


def _cmd_density(args) -> int:
    system = _load_system(args.file)
    report = validate_system(system)
    if not report.ok:
        print(report)
        return 1
    choice, why = _find_dual(system)
    if choice is None:
        print(f"no dual found: {why}")
        return 1
    print(f"dual via {choice.kind}: {choice.note}")
    mass = density_mass(choice.density)
    print(f"density: {choice.density!r}, mass over {system.base}: {mass}")
    window = _parse_window(args.window)
    rep = kuzmin_residual(system, choice.density, args.grid, window=window,
                          keep_points=True)
    print(rep)
    if args.out:
        rows = [(x, choice.density.value_float(x), r) for x, r in rep.points]
        if args.format == "json":
            text = _dump_json([{"x": x, "h": h, "residual": r}
                               for x, h, r in rows])
        else:
            buf = io.StringIO()
            writer = csv.writer(buf, lineterminator="\n")
            writer.writerow(["x", "h(x)", "residual"])
            for x, h, r in rows:
                writer.writerow([repr(x), repr(h), repr(r)])
            text = buf.getvalue()
        _write_text(args.out, text, args.force)
    return 0


def _cmd_verify(args) -> int:
    system = _load_system(args.file)
    checks: list[tuple[str, bool, str]] = []

    report = validate_system(system)
    checks.append(("validate", report.ok,
                   "no findings" if report.ok else "; ".join(report.findings)))

    choice = None
    if report.ok:
        choice, why = _find_dual(system)
        checks.append(("dual", choice is not None,
                       choice.note if choice else why))

    run_kuzmin = args.kuzmin or (args.orbit is None
                                 and args.conformal is None)
    if choice is not None and run_kuzmin:
        window = _parse_window(args.window)
        rep = kuzmin_residual(system, choice.density, args.grid,
                              window=window)
        if rep.tail_budget > 0:
            ok = rep.residual <= 2 * rep.tail_budget
            detail = (f"residual {rep.residual:.3e} vs "
                      f"2 x tail budget {2 * rep.tail_budget:.3e}")
        else:
            ok = rep.residual < 1e-9
            detail = f"residual {rep.residual:.3e} (no truncation tail)"
        checks.append(("kuzmin", ok, detail))

    if choice is not None and args.orbit:
        try:
            lo, hi = system.base.lo_float(), system.base.hi_float()
            x0 = lo + (math.sqrt(2) - 1) * (hi - lo)
            hist = orbit_histogram(system, x0, args.orbit, args.bins)
            dist = compare_orbit_histogram(hist, choice.density)
            ok = dist < args.orbit_tol
            detail = (f"sup bin distance {dist:.4f} vs {args.orbit_tol} "
                      f"(n = {args.orbit}, {args.bins} bins, "
                      f"{hist.escapes} escapes)")
        except ValueError as e:
            ok, detail = False, str(e)
        checks.append(("orbit", ok, detail))

    if choice is not None and args.conformal is not None:
        try:
            if choice.families is not None:
                fams = choice.families
                first = fams.support[0]
                y = (first.lo.finite() + first.hi.finite()) / 2
            elif choice.density.is_dirac:
                fams = dirac_dual_families(system, choice.density.point)
                y = choice.density.point
            else:
                fams = families_from_system(choice.dual)
                first = choice.dual.branches[0].domain
                y = (first.lo.finite() + first.hi.finite()) / 2
            conf = conformal_sum_check(fams, y, args.conformal)
            ok = float(conf.residual) < 1e-12
            checks.append(("conformal", ok, str(conf)))
        except (ValueError, ArithmeticError) as e:
            checks.append(("conformal", False, str(e)))

    for name, ok, detail in checks:
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    if args.out:
        _write_text(args.out, _dump_json([
            {"check": n, "ok": ok, "detail": d} for n, ok, d in checks]),
            args.force)
    return 0 if all(ok for _, ok, _ in checks) else 1


def _cmd_sweep(args) -> int:
    stype = SystemType.parse(args.type)
    orders = _parse_orders(args.orders)
    header = ["lambda", "mu", "nu", "link_det", "type_residual"] + list(orders)
    rows = []
    for lam in _parse_range(args.lam):
        for mu in _parse_range(args.mu):
            for nu in _parse_range(args.nu):
                params = ParamTriple(lam, mu, nu)
                system = build_standard_system(stype, params)
                row = [str(lam), str(mu), str(nu),
                       str(dual_link_determinant(system)),
                       str(type_condition_residual(stype, params))]
                for order in orders:
                    row.append(construct_dual(system, order).outcome)
                rows.append(row)
    if args.format == "json":
        text = _dump_json([dict(zip(header, row)) for row in rows])
    else:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
        text = buf.getvalue()
    _write_text(args.out, text, args.force)
    return 0


# -- parser ----------------------------------------------------------------


def _add_output_flags(p: argparse.ArgumentParser, formats=("json",)) -> None:
    p.add_argument("--out", help="output path (default stdout)")
    p.add_argument("--force", action="store_true",
                   help="overwrite an existing output file")
    p.add_argument("--format", choices=list(formats), default=formats[0])


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="moebiusdual",
        description="Piecewise fractional-linear maps, their duals, and "
                    "closed-form invariant densities.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="write a 3-branch family descriptor")
    p.add_argument("--type", required=True,
                   help="branch orientations, e.g. 1,1,-1")
    p.add_argument("--params", required=True,
                   help="positive parameters, e.g. 1/2,4/15,2")
    _add_output_flags(p)
    p.set_defaults(func=_cmd_build)

    p = sub.add_parser("example", help="write a canonical descriptor")
    p.add_argument("name", choices=list(CANONICAL_NAMES))
    p.add_argument("--g", type=int, default=2,
                   help="digit base for gadic (default 2)")
    p.add_argument("--truncation", type=int, default=None,
                   help="branch count for rcf (default 100)")
    _add_output_flags(p)
    p.set_defaults(func=_cmd_example)

    p = sub.add_parser("validate", help="structural checks on a descriptor")
    p.add_argument("file")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("classify", help="conjugacy and dual diagnostics")
    p.add_argument("file")
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser("dual", help="run the dual solver per order")
    p.add_argument("file")
    p.add_argument("--orders", default="all",
                   help="all or a comma list from "
                        + ",".join(ORDERS))
    _add_output_flags(p)
    p.set_defaults(func=_cmd_dual)

    p = sub.add_parser("density",
                       help="closed-form density with residual table")
    p.add_argument("file")
    p.add_argument("--grid", type=int, default=256)
    p.add_argument("--window", help="evaluation window lo:hi, exact")
    _add_output_flags(p, formats=("csv", "json"))
    p.set_defaults(func=_cmd_density)

    p = sub.add_parser("verify", help="verification battery")
    p.add_argument("file")
    p.add_argument("--kuzmin", action="store_true",
                   help="invariance residual check (default when no "
                        "other check is requested)")
    p.add_argument("--grid", type=int, default=512)
    p.add_argument("--window", help="evaluation window lo:hi, exact")
    p.add_argument("--orbit", type=int, default=None, metavar="N",
                   help="orbit histogram length")
    p.add_argument("--bins", type=int, default=20)
    p.add_argument("--orbit-tol", type=float, default=0.01)
    p.add_argument("--conformal", type=int, default=None, metavar="S",
                   help="conformal word-sum depth")
    _add_output_flags(p)
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("sweep", help="table over exact parameter ranges")
    p.add_argument("--type", required=True)
    p.add_argument("--lambda", dest="lam", required=True,
                   help="value or a:b:step, exact rationals")
    p.add_argument("--mu", required=True, help="value or a:b:step")
    p.add_argument("--nu", required=True, help="value or a:b:step")
    p.add_argument("--orders", default="all")
    _add_output_flags(p, formats=("csv", "json"))
    p.set_defaults(func=_cmd_sweep)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.func(args)
    except DescriptorError as e:
        print(f"descriptor error: {e}", file=sys.stderr)
        return 2
    except (ValueError, ArithmeticError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
