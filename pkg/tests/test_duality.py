"""Dual existence and construction: the closure condition, conjugacy
solving, endpoint chains, exceptional and infeasible orders."""

import random
from fractions import Fraction as F

import pytest

from moebiusdual import (
    ConjugacyMap,
    Interval,
    MoebiusMatrix,
    ParamTriple,
    SystemType,
    as_point,
    build_standard_system,
    canonical_example,
    compose_word,
    condition_param_mu,
    construct_dual,
    dual_from_conjugacy,
    dual_link_determinant,
    evaluate_map,
    exceptional_condition,
    mirror_order,
    order_filter,
    projectively_equal,
    solve_conjugacy,
    symmetric_conjugacy_space,
    validate_system,
)
from moebiusdual.duality import ORDERS

M = MoebiusMatrix

ALL_TYPES = [
    (1, 1, 1), (1, 1, -1), (1, -1, -1), (1, -1, 1),
    (-1, 1, -1), (-1, 1, 1), (-1, -1, 1), (-1, -1, -1),
]


def rand_params(rng, hi=10):
    return ParamTriple(*(F(rng.randrange(1, hi), rng.randrange(1, hi))
                         for _ in range(3)))


# ---------------------------------------------------------------------------
# closure condition and the link determinant

def test_condition_residual_frozen_values():
    assert type_condition_residual_of((1, 1, 1), F(1), F(1), F(1)) == 2
    assert type_condition_residual_of((1, 1, 1), F(1, 2), F(1, 2), F(2)) == 0
    assert type_condition_residual_of((1, -1, 1), F(2, 3), F(1), F(3, 2)) == 0
    assert type_condition_residual_of((-1, -1, -1), F(1), F(4, 5), F(1, 7)) == 0


def type_condition_residual_of(signs, l, m, n):
    from moebiusdual import type_condition_residual
    return type_condition_residual(SystemType(*signs), ParamTriple(l, m, n))


def test_condition_mu_frozen_values():
    cases = [
        ((1, 1, 1), F(1, 2), F(2), F(1, 2)),
        ((1, 1, -1), F(1, 3), F(1, 5), F(9, 20)),
        ((1, -1, -1), F(1, 4), F(1, 3), F(13, 12)),
        ((1, -1, 1), F(2, 3), F(3, 2), F(1)),
        ((-1, 1, -1), F(1, 2), F(1, 3), F(5, 12)),
        ((-1, 1, 1), F(1, 5), F(2), F(3, 19)),
        ((-1, -1, -1), F(1), F(1, 7), F(4, 5)),
    ]
    for signs, lam, nu, mu in cases:
        assert condition_param_mu(SystemType(*signs), lam, nu) == mu


def test_condition_mu_lands_on_surface_for_every_type():
    rng = random.Random(41)
    for signs in ALL_TYPES:
        stype = SystemType(*signs)
        for _ in range(20):
            lam = F(rng.randrange(1, 9), rng.randrange(1, 9))
            nu = F(rng.randrange(1, 9), rng.randrange(1, 9))
            mu = condition_param_mu(stype, lam, nu)
            assert mu > 0
            assert type_condition_residual_of(signs, lam, mu, nu) == 0


def test_link_determinant_frozen():
    sys_exc = build_standard_system(SystemType(1, 1, 1),
                                    ParamTriple(F(1, 2), F(4, 15), F(2)))
    assert dual_link_determinant(sys_exc) == F(7, 10)
    assert type_condition_residual_of((1, 1, 1), F(1, 2), F(4, 15), F(2)) == \
        F(-7, 10)
    assert dual_link_determinant(canonical_example("comb")) == 2


def test_link_determinant_needs_three_branches():
    with pytest.raises(ValueError):
        dual_link_determinant(canonical_example("renyi"))


def test_minus_plus_plus_type_uses_its_own_parameter():
    # regression pin: the residual at this triple is 9/5, not 0, and the
    # link determinant agrees that no dual closes up here
    signs = (-1, 1, 1)
    off = ParamTriple(F(1, 5), F(12, 19), F(2))
    assert type_condition_residual_of(signs, *off.as_tuple()) == F(9, 5)
    assert dual_link_determinant(
        build_standard_system(SystemType(*signs), off)) != 0
    mu = condition_param_mu(SystemType(*signs), F(1, 5), F(2))
    assert mu == F(3, 19)
    on = ParamTriple(F(1, 5), mu, F(2))
    assert dual_link_determinant(
        build_standard_system(SystemType(*signs), on)) == 0


def test_condition_vanishes_iff_link_det_vanishes():
    rng = random.Random(42)
    for signs in ALL_TYPES:
        stype = SystemType(*signs)
        for _ in range(12):
            params = rand_params(rng)
            system = build_standard_system(stype, params)
            res = type_condition_residual_of(signs, *params.as_tuple())
            assert (res == 0) == (dual_link_determinant(system) == 0)


# ---------------------------------------------------------------------------
# conjugacy maps

def test_conjugacy_map_basics():
    psi = ConjugacyMap(-1, 2, 1)   # (2 + t)/(-1 + 2t), pole at 1/2
    assert psi.pole() == as_point(F(1, 2))
    assert not psi.admissible_on(Interval(0, 1))
    assert psi.admissible_on(Interval(0, F(1, 4)))
    assert not psi.degenerate
    with pytest.raises(ValueError):
        ConjugacyMap(0, 0, 1)
    with pytest.raises(ValueError):
        psi.constant_point()


def test_conjugacy_map_degenerate():
    psi = ConjugacyMap(1, 2, 4)   # det = 0: psi == 2 everywhere
    assert psi.degenerate
    assert psi.direction == 0
    assert psi.constant_point() == as_point(2)


def test_solve_conjugacy_on_examples():
    ren = solve_conjugacy(canonical_example("renyi"))
    assert ren.coefficients() == (F(0), F(1), F(-1))
    assert ren.direction == -1
    assert ren.apply(F(1, 2)) == as_point(1)
    assert ren.apply(1) == as_point(0)

    rcf = solve_conjugacy(canonical_example("rcf", truncation=3))
    assert rcf.coefficients() == (F(1), F(0), F(1))      # identity: self-dual

    gad = solve_conjugacy(canonical_example("gadic", g=2))
    assert gad.degenerate
    assert gad.constant_point() == as_point(0)

    assert solve_conjugacy(canonical_example("comb")) is None


def test_dual_from_conjugacy_renyi():
    renyi = canonical_example("renyi")
    dual = dual_from_conjugacy(renyi, solve_conjugacy(renyi))
    assert str(dual.base) == "[0, inf["
    assert [(b.matrix.entries(), str(b.domain)) for b in dual.branches] == [
        ((F(0), F(1), F(1), F(-1)), "[0, 1["),
        ((F(1), F(0), F(-1), F(1)), "[1, inf["),
    ]
    # the shift y - 1 on [1, inf[, (1 - y)/y flipping [0, 1[
    assert dual.branches[1].matrix.apply(as_point(2)) == as_point(1)
    assert dual.branches[0].matrix.apply(as_point(F(1, 2))) == as_point(1)


def test_order_filter_and_mirror():
    assert mirror_order("lmn") == "nml"
    assert mirror_order("lnm") == "mnl"
    assert sorted(order_filter(solve_conjugacy(canonical_example("renyi")))) \
        == ["nml"]
    assert order_filter(None) == set()
    assert order_filter(solve_conjugacy(canonical_example("gadic", g=2))) \
        == set()


# ---------------------------------------------------------------------------
# dual construction on the three-branch family

def test_natural_dual_frozen_witness():
    system = build_standard_system(SystemType(1, 1, 1),
                                   ParamTriple(F(1, 2), F(1, 2), F(2)))
    report = construct_dual(system, "lmn")
    assert report.outcome == "NaturalDifferentiable"
    assert report.ok
    w = report.best()
    assert w.classification == "natural"
    assert w.order == "nml"                      # realized via the mirror
    assert [str(e) for e in w.endpoints] == ["-1/2", "-1/3", "-1/4", "0"]
    assert w.endpoint_sources == [
        "fixed point of inverse branch 2",
        "image of the near end under inverse branch 2",
        "image of the far end under inverse branch 0",
        "fixed point of inverse branch 0",
    ]
    assert str(w.dual.base) == "[-1/2, 0]"
    assert [(b.matrix.entries(), str(b.domain)) for b in w.dual.branches] == [
        ((F(0), F(-2), F(1), F(3)), "[-1/2, -1/3["),
        ((F(0), F(-1), F(1, 2), F(2)), "[-1/3, -1/4["),
        ((F(1, 2), F(0), F(0), F(1)), "[-1/4, 0]"),
    ]
    assert validate_system(w.dual).ok
    assert any("middle branch" in r for r in report.rejected)


def test_dual_branches_are_transposes():
    system = build_standard_system(SystemType(1, 1, 1),
                                   ParamTriple(F(1, 2), F(1, 2), F(2)))
    w = construct_dual(system, "lmn").best()
    for db in w.dual.branches:
        k = int(db.label.split()[-1])
        assert projectively_equal(db.matrix,
                                  system.branches[k].matrix.transpose())


def test_natural_dual_conjugates_the_map():
    system = build_standard_system(SystemType(1, 1, 1),
                                   ParamTriple(F(1, 2), F(1, 2), F(2)))
    w = construct_dual(system, "lmn").best()
    psi = w.psi
    rng = random.Random(43)
    for _ in range(60):
        x = F(rng.randrange(0, 97), 97)
        img, _ = evaluate_map(system, x)
        y = psi.apply(x)
        dimg, _ = evaluate_map(w.dual, y.as_fraction())
        assert dimg == psi.apply(img.as_fraction())


def test_corrected_type_gets_natural_dual():
    system = build_standard_system(SystemType(-1, 1, 1),
                                   ParamTriple(F(1, 5), F(3, 19), F(2)))
    assert validate_system(system).ok
    report = construct_dual(system, "lmn")
    assert report.outcome == "NaturalDifferentiable"
    assert validate_system(report.best().dual).ok


def test_exceptional_dual_frozen_witness():
    system = build_standard_system(SystemType(1, 1, 1),
                                   ParamTriple(F(1, 2), F(4, 15), F(2)))
    report = construct_dual(system, "lnm")
    assert report.outcome == "Exceptional"
    w = report.best()
    assert w.classification == "exceptional"
    assert w.order == "mnl"
    assert [str(e) for e in w.endpoints] == ["-2/3", "-3/5", "-1/3", "0"]
    assert [b.matrix.entries() for b in w.dual.branches] == [
        (F(-7, 15), F(-1), F(6, 5), F(2)),
        (F(0), F(-2), F(1), F(3)),
        (F(1, 2), F(0), F(0), F(1)),
    ]


def test_exceptional_point_order_sweep():
    system = build_standard_system(SystemType(1, 1, 1),
                                   ParamTriple(F(1, 2), F(4, 15), F(2)))
    outcomes = {order: construct_dual(system, order).outcome
                for order in ORDERS}
    assert outcomes["lnm"] == "Exceptional"
    assert outcomes["mnl"] == "Exceptional"
    for order in ("lmn", "nml", "mln", "nlm"):
        assert outcomes[order] == "Infeasible"


def test_infeasible_order_reports_reason():
    system = build_standard_system(SystemType(1, 1, -1),
                                   ParamTriple(F(1, 3), F(9, 20), F(1, 5)))
    report = construct_dual(system, "mln")
    assert report.outcome == "Infeasible"
    assert not report.ok
    assert report.witnesses == []
    assert "middle branch" in report.reason


def test_construct_dual_input_checks():
    with pytest.raises(ValueError):
        construct_dual(canonical_example("renyi"), "lmn")
    system = build_standard_system(SystemType(1, 1, 1),
                                   ParamTriple(F(1, 2), F(1, 2), F(2)))
    with pytest.raises(ValueError):
        construct_dual(system, "abc")


# ---------------------------------------------------------------------------
# tabulated exceptional surfaces

def test_exceptional_condition_tabulated():
    out = exceptional_condition(SystemType(1, 1, 1), "lnm",
                                ParamTriple(F(1, 2), F(4, 15), F(2)))
    assert out.kind == "tabulated"
    assert out.lhs == out.rhs == F(23, 5)
    assert out.residual == 0
    # the mirror order hits the same surface
    mirr = exceptional_condition(SystemType(1, 1, 1), "mnl",
                                 ParamTriple(F(1, 2), F(4, 15), F(2)))
    assert mirr.kind == "tabulated"
    assert mirr.residual == 0


def test_exceptional_condition_other_kinds():
    out = exceptional_condition(SystemType(1, 1, -1), "mln",
                                ParamTriple(F(1), F(1), F(1)))
    assert out.kind == "infeasible"
    assert "vanish" in out.reason
    out = exceptional_condition(SystemType(1, 1, 1), "lmn",
                                ParamTriple(F(1), F(1), F(1)))
    assert out.kind == "not_tabulated"
    assert out.lhs is None and out.rhs is None
    with pytest.raises(ValueError):
        out.residual
    with pytest.raises(ValueError):
        exceptional_condition(SystemType(1, 1, 1), "xyz",
                              ParamTriple(F(1), F(1), F(1)))


def test_remaining_exceptional_points_close_up():
    cases = [
        ((1, -1, -1), "lnm", (F(1), F(4), F(6, 5)), F(24)),
        ((1, -1, 1), "lnm", (F(1), F(1), F(3)), F(3)),
        ((1, -1, 1), "mln", (F(1, 4), F(1, 2), F(1)), F(1, 2)),
    ]
    for signs, order, params, value in cases:
        out = exceptional_condition(SystemType(*signs), order,
                                    ParamTriple(*params))
        assert out.kind == "tabulated"
        assert out.lhs == out.rhs == value
        rep = construct_dual(
            build_standard_system(SystemType(*signs), ParamTriple(*params)),
            order)
        assert rep.outcome == "Exceptional"


# ---------------------------------------------------------------------------
# two-branch symmetry spaces

def beta(q):
    s = 1 if q > 0 else -1
    return M(abs(q), s, 1, 0)


def test_word_and_transpose_word():
    word = compose_word([beta(2), beta(-3), beta(-4)])
    assert word.entries() == (F(26), F(-7), F(11), F(-3))
    tword = compose_word([beta(2).transpose(), beta(-3).transpose(),
                          beta(-4).transpose()])
    assert tword.entries() == (F(18), F(5), F(11), F(3))


def test_symmetric_space_empty_for_mixed_word():
    word = compose_word([beta(2), beta(-3), beta(-4)])
    tword = compose_word([beta(2).transpose(), beta(-3).transpose(),
                          beta(-4).transpose()])
    space = symmetric_conjugacy_space(tword, word)
    assert set(space) == {1, -1}
    assert space[1].dimension == 0
    assert space[-1].dimension == 0
    assert space[1].basis == []


def test_symmetric_space_of_a_matrix_with_itself():
    alpha = M(2, 1, 1, 1)
    space = symmetric_conjugacy_space(alpha, alpha)
    assert space[1].dimension == 2
    assert space[1].basis == [(F(1), F(1), F(0)), (F(1), F(0), F(1))]
    assert space[-1].dimension == 0
