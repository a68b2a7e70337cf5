"""Closed-form densities, masses, and the two verification instruments
(Kuzmin residual grids, conformal word sums)."""

from fractions import Fraction as F

import numpy as np
import pytest

from moebiusdual import (
    INFINITY,
    BranchFamily,
    DiracDensity,
    DualFamilies,
    Interval,
    IntervalUnionDensity,
    MoebiusMatrix,
    ParamTriple,
    QuadSurd,
    SystemType,
    as_point,
    build_standard_system,
    canonical_example,
    comb_dual_families,
    comb_series_density,
    compare_orbit_histogram,
    conformal_sum_check,
    construct_dual,
    density_from_dual,
    density_mass,
    dirac_dual_families,
    dual_from_conjugacy,
    families_from_system,
    kuzmin_residual,
    orbit_histogram,
    solve_conjugacy,
)

M = MoebiusMatrix
UNIT = Interval(0, 1)


# ---------------------------------------------------------------------------
# density values

def test_unit_dual_density_values():
    h = density_from_dual(UNIT)
    assert isinstance(h, IntervalUnionDensity)
    assert h.value_exact(F(0)) == 1
    assert h.value_exact(F(1)) == F(1, 2)
    assert h.value_exact(F(1, 3)) == F(3, 4)
    xs = np.linspace(0.0, 1.0, 7)
    assert np.allclose(h.value_array(xs), 1.0 / (1.0 + xs))
    assert h.tail_array(xs).max() == 0.0
    assert h.sup_float(UNIT) == 1.0


def test_renyi_density_is_reciprocal():
    renyi = canonical_example("renyi")
    dual = dual_from_conjugacy(renyi, solve_conjugacy(renyi))
    h = density_from_dual(dual, base=UNIT)
    assert h.value_exact(F(1, 2)) == 2
    assert h.value_exact(F(1, 3)) == 3
    assert h.value_exact(F(2, 3)) == F(3, 2)


def test_dirac_density_values():
    at0 = DiracDensity(F(0), base=UNIT)
    assert at0.is_dirac
    assert at0.value_exact(F(1, 2)) == 1
    at1 = DiracDensity(F(1), base=UNIT)
    assert at1.value_exact(F(1)) == F(1, 4)
    assert at1.sup_float(UNIT) == 1.0


def test_density_kernel_pole_raises():
    h = IntervalUnionDensity([Interval(-1, F(-1, 2))], base=UNIT)
    with pytest.raises(ArithmeticError):
        h.value_exact(F(2))      # 1 + 2*(-1/2) = 0 inside the dual set


def test_inadmissible_dual_set_rejected():
    with pytest.raises(ValueError, match="inadmissible dual set"):
        IntervalUnionDensity([Interval(-3, -2)], base=UNIT)
    with pytest.raises(ValueError):
        DiracDensity(F(-2), base=UNIT)


# ---------------------------------------------------------------------------
# masses

def test_unit_dual_mass_is_log_two():
    mv = density_mass(density_from_dual(UNIT))
    assert not mv.infinite
    assert mv.rational == 0
    assert mv.logs == [(F(1), F(2))]
    assert str(mv) == "ln(2)"
    assert float(mv) == pytest.approx(0.6931471805599453, abs=1e-15)
    lo, hi = mv.float_bounds()
    assert lo <= float(mv) <= hi


def test_mass_numeric_integration_oracle():
    h = density_from_dual(UNIT)
    xs = np.linspace(0.0, 1.0, 20001)
    numeric = np.trapezoid(h.value_array(xs), xs)
    assert abs(numeric - float(density_mass(h))) < 1e-8


def test_touching_pieces_cancel_exactly():
    split = IntervalUnionDensity(
        [Interval(0, F(1, 2), hi_closed=False), Interval(F(1, 2), 1)],
        base=UNIT)
    assert split.value_exact(F(1, 3)) == F(3, 4)
    mv = split.mass_over(UNIT)
    assert mv.logs == [(F(1), F(2))]


def test_infinite_masses():
    renyi = canonical_example("renyi")
    h = density_from_dual(dual_from_conjugacy(renyi, solve_conjugacy(renyi)),
                          base=UNIT)
    assert density_mass(h).infinite          # integral of 1/x diverges at 0
    corner = IntervalUnionDensity([Interval(-1, F(-1, 2))], base=UNIT)
    assert corner.mass_over(UNIT).infinite   # kernel vanishes at x=1, y=-1
    assert str(corner.mass_over(UNIT)) == "infinite"
    assert float(corner.mass_over(UNIT)) == float("inf")


def test_mass_irrational_endpoint_has_no_closed_form():
    h = IntervalUnionDensity([Interval(1, as_point(QuadSurd(0, 1, 2)))],
                             base=UNIT)
    with pytest.raises(ArithmeticError, match="no closed form"):
        h.mass_over(UNIT)


def test_mass_over_unbounded_interval_rejected():
    h = density_from_dual(UNIT)
    with pytest.raises(ValueError):
        h.mass_over(Interval(0, INFINITY))


def test_dirac_masses():
    at1 = DiracDensity(F(1), base=UNIT)
    full = at1.mass_over(UNIT)
    assert full.rational == F(1, 2) and full.logs == []
    assert str(at1.mass_over(Interval(0, F(1, 2)))) == "1/3"
    assert at1.mass_over(Interval(0, INFINITY)).rational == 1
    assert DiracDensity(F(0), base=UNIT) \
        .mass_over(Interval(0, INFINITY)).infinite


def test_long_mass_sums_print_compactly():
    mv = comb_series_density(30).mass_over(UNIT)
    assert len(mv.logs) > 8
    text = str(mv)
    assert text.startswith("~") and "log terms" in text


# ---------------------------------------------------------------------------
# the series density of the comb system

def test_comb_series_matches_hand_summed_partial_sums():
    K = 50
    h = comb_series_density(K)
    for x in (F(1, 3), F(1, 2), F(9, 10)):
        manual = sum((F(2 * k + 1) / (1 + x * (2 * k + 1))
                      - F(2 * k) / (1 + x * 2 * k) for k in range(K + 1)),
                     F(0))
        assert h.value_exact(x) == manual


def test_comb_series_tail_dominates_truncation_error():
    coarse, fine = comb_series_density(50), comb_series_density(2000)
    for x in (0.2, 0.5, 0.9):
        remainder = fine.value_float(x) - coarse.value_float(x)
        assert 0.0 < remainder <= coarse.tail_float(x) * (1 + 1e-9)
    assert comb_series_density(100).tail_float(0.5) < \
        comb_series_density(10).tail_float(0.5)


# ---------------------------------------------------------------------------
# Kuzmin residual grids

def test_kuzmin_gadic_exactly_zero():
    g2 = canonical_example("gadic", g=2)
    h = DiracDensity(F(0), base=UNIT)
    rep = kuzmin_residual(g2, h, 101, exact=True)
    assert rep.exact and rep.exact_residual == 0
    assert rep.residual == 0.0
    assert rep.tail_budget == 0.0


def test_kuzmin_renyi_within_rounding():
    renyi = canonical_example("renyi")
    h = density_from_dual(dual_from_conjugacy(renyi, solve_conjugacy(renyi)),
                          base=UNIT)
    rep = kuzmin_residual(renyi, h, 1001,
                          window=Interval(F(1, 100), F(99, 100)))
    assert rep.residual < 1e-12
    assert rep.tail_budget == 0.0
    assert 0.01 <= rep.worst_x <= 0.99
    assert rep.grid == 1001


def test_kuzmin_keep_points():
    g3 = canonical_example("gadic", g=3)
    rep = kuzmin_residual(g3, DiracDensity(F(0), base=UNIT), 11,
                          keep_points=True)
    assert rep.points is not None and len(rep.points) == 11
    rep2 = kuzmin_residual(g3, DiracDensity(F(0), base=UNIT), 11)
    assert rep2.points is None


def test_kuzmin_flags_wrong_density():
    # the Gauss density handed to the doubling map cannot balance
    rep = kuzmin_residual(canonical_example("gadic", g=2),
                          density_from_dual(UNIT), 101)
    assert rep.residual > 0.01


# ---------------------------------------------------------------------------
# conformal word sums

def test_comb_conformal_sum_exact():
    fams = comb_dual_families(50)
    assert [f.label for f in fams.families] == \
        ["shift", "recip-even", "recip-odd"]
    for y in (F(1, 4), F(1, 2), F(3, 4)):
        rep = conformal_sum_check(fams, y, 1)
        assert rep.value == rep.target
        assert rep.words == 3 and rep.dropped == 0


def test_comb_shift_orientation_matters():
    # replacing the shift y - 2 with 2 - y breaks the identity
    fams = comb_dual_families(50)
    flipped = DualFamilies(
        support=fams.support,
        families=[BranchFamily(M(1, 0, 2, -1), fams.families[0].pieces,
                               "shift-flipped")] + list(fams.families[1:]),
        truncation=fams.truncation)
    rep = conformal_sum_check(flipped, F(1, 2), 1)
    assert rep.value != rep.target


def test_dirac_conformal_depth_two():
    fams = dirac_dual_families(canonical_example("gadic", g=2))
    rep = conformal_sum_check(fams, F(0), 2)
    assert rep.value == rep.target == 1
    assert rep.words == 4 and rep.dropped == 0


def test_finite_dual_conformal():
    system = build_standard_system(SystemType(1, 1, 1),
                                   ParamTriple(F(1, 2), F(1, 2), F(2)))
    fams = families_from_system(construct_dual(system, "lmn").best().dual)
    rep = conformal_sum_check(fams, F(-1, 4), 1)
    assert rep.value == rep.target == F(4, 3)
    assert rep.dropped == 0


def test_conformal_word_cap():
    fams = dirac_dual_families(canonical_example("gadic", g=2))
    with pytest.raises(ValueError, match="cap"):
        conformal_sum_check(fams, F(0), 40)


# ---------------------------------------------------------------------------
# orbit statistics against a density

def test_orbit_histogram_matches_gauss_density():
    system = canonical_example("rcf", truncation=500)
    hist = orbit_histogram(system, 0.41421356, 200000, 20)
    sup = compare_orbit_histogram(hist, density_from_dual(UNIT))
    assert sup < 0.01
