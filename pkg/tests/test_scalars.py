import math

import pytest
from gmpy2 import mpq
from hypothesis import given, settings, strategies as st

from hahnspec.errors import NotAPerfectSquare, OddValuation, ResidueNotASquare
from hahnspec.scalars import (
    INFINITE,
    TRIVIAL,
    FactorSet,
    LaurentSeries,
    Unknown,
    abs_value,
    factor_set_check,
    hensel_sqrt,
    rational_sqrt,
    residue,
    series_add,
    series_inv,
    series_mul,
    valuation,
)
from hahnspec.textfmt import format_series, parse_series

t = LaurentSeries.monomial(1, 1)


def S(text):
    return parse_series(text)


def test_add_cancellation_keeps_precision():
    r = series_add(LaurentSeries({1: 1, 2: 1}, 5), LaurentSeries({1: -1}, 5))
    assert r == LaurentSeries({2: 1}, 5)


def test_add_precision_is_min():
    r = series_add(LaurentSeries.const(1, 10), LaurentSeries.zero(3))
    assert r.prec == 3 and r.coeff(0) == 1


def test_add_exact():
    assert S("t^2 + 3*t^3") + S("t^3") == S("t^2 + 4*t^3")


def test_mul_basic():
    assert series_mul(S("1 + t"), S("1 - t")) == S("1 - t^2")
    f = S("1/3 - 2*t + 5*t^4 (prec 9)")
    assert series_mul(f, LaurentSeries.const(1)) == f


def test_twisted_monomials():
    c = FactorSet.power(2)
    assert series_mul(t, t, c) == S("2*t^2")
    assert series_mul(t**2, t**3, c) == LaurentSeries({5: 64})


def test_inverse_examples():
    inv = series_inv(LaurentSeries({0: 1, 1: -1}, 12))
    assert inv == LaurentSeries({k: 1 for k in range(12)}, 12)
    assert series_inv(t) == LaurentSeries({-1: 1})
    g = LaurentSeries({0: 2, 1: 1}, 10)
    h = series_inv(g)
    assert [h.coeff(k) for k in range(4)] == [mpq(1, 2), mpq(-1, 4), mpq(1, 8), mpq(-1, 16)]
    assert (h * g - 1).is_zero()


def test_valuation_model():
    assert valuation(S("t^2 + 3*t^3")) == 2
    assert valuation(LaurentSeries.zero()) == INFINITE
    v = valuation(LaurentSeries.zero(7))
    assert isinstance(v, Unknown) and v.bound == 7


def test_abs_value():
    assert abs_value(t**2) == 0.25
    assert abs_value(LaurentSeries.const(1)) == 1.0
    assert abs_value(LaurentSeries.zero()) == 0.0


def test_residue():
    assert residue(S("3 + t")) == 3
    assert residue(t) == 0
    assert residue(S("5/7 + 2*t^3")) == mpq(5, 7)


def test_hensel_sqrt():
    r = hensel_sqrt(LaurentSeries({0: 1, 1: 1}, 16))
    assert [r.coeff(k) for k in range(3)] == [1, mpq(1, 2), mpq(-1, 8)]
    assert (r * r - LaurentSeries({0: 1, 1: 1}, 16)).is_zero()
    assert hensel_sqrt(S("4*t^2")) == S("2*t")
    with pytest.raises(ResidueNotASquare):
        hensel_sqrt(S("2 + t"))
    with pytest.raises(OddValuation):
        hensel_sqrt(t)


def test_rational_sqrt():
    assert rational_sqrt(mpq(9, 4)) == mpq(3, 2)
    assert rational_sqrt(0) == 0
    with pytest.raises(NotAPerfectSquare):
        rational_sqrt(2)


def test_factor_sets():
    assert factor_set_check(TRIVIAL, 5)
    assert factor_set_check(FactorSet.power(2), 5)
    assert not factor_set_check(FactorSet(lambda a, b: mpq(a + b + 1)), 2)


def test_format_roundtrip_example():
    f = S("1 + 1/2*t - 1/8*t^2 (prec 32)")
    assert format_series(f) == "1 + 1/2*t - 1/8*t^2 (prec 32)"


# ---- properties

coef = st.fractions(min_value=-5, max_value=5, max_denominator=4).map(lambda q: mpq(q.numerator, q.denominator))


@st.composite
def series(draw, lo=-2, hi=6, exact=None):
    terms = draw(st.dictionaries(st.integers(lo, hi), coef, max_size=5))
    if exact is None:
        exact = draw(st.booleans())
    prec = INFINITE if exact else draw(st.integers(hi + 1, hi + 8))
    return LaurentSeries(terms, prec)


@given(series(), series(), series())
@settings(max_examples=150, deadline=None)
def test_ring_axioms(f, g, h):
    assert (f * g).agrees(g * f)
    assert ((f * g) * h).agrees(f * (g * h))
    assert (f * (g + h)).agrees(f * g + f * h)


@given(series(), series())
@settings(max_examples=150, deadline=None)
def test_valuation_is_additive(f, g):
    vf, vg = valuation(f), valuation(g)
    if isinstance(vf, Unknown) or isinstance(vg, Unknown):
        return
    vfg = valuation(f * g)
    if vf == INFINITE or vg == INFINITE:
        assert vfg == INFINITE or isinstance(vfg, Unknown)
    else:
        assert vfg == vf + vg


@given(series(lo=0, hi=5, exact=False))
@settings(max_examples=100, deadline=None)
def test_inverse_times_self(f):
    if isinstance(valuation(f), Unknown) or f.is_zero():
        return
    assert (series_inv(f) * f - 1).is_zero()


@given(series(lo=0, hi=4, exact=False))
@settings(max_examples=100, deadline=None)
def test_square_root_of_square(f):
    if isinstance(valuation(f), Unknown) or f.is_zero():
        return
    sq = f * f
    r = hensel_sqrt(sq)
    assert (r * r - sq).is_zero()
    assert r.agrees(f) or r.agrees(-f)


@given(series(), series())
@settings(max_examples=100, deadline=None)
def test_twisted_product_is_commutative(f, g):
    c = FactorSet.power(2)
    assert series_mul(f, g, c).agrees(series_mul(g, f, c))


@given(series())
@settings(max_examples=150, deadline=None)
def test_text_roundtrip(f):
    assert parse_series(format_series(f)) == f


def test_flint_product_matches_schoolbook():
    import random

    rng = random.Random(3)
    for _ in range(200):
        a = {k: mpq(rng.randint(-9, 9), rng.randint(1, 5)) for k in range(rng.randint(-3, 0), rng.randint(8, 20))}
        b = {k: mpq(rng.randint(-9, 9), rng.randint(1, 5)) for k in range(rng.randint(-3, 0), rng.randint(8, 20))}
        pa, pb = rng.choice([INFINITE, 25]), rng.choice([INFINITE, 30])
        f, g = LaurentSeries(a, pa), LaurentSeries(b, pb)
        naive = {}
        for i, x in f.terms():
            for j, y in g.terms():
                naive[i + j] = naive.get(i + j, 0) + x * y
        prod = f * g
        for e in range(-6, 40):
            if e < prod.prec:
                assert prod.coeff(e) == naive.get(e, 0)
        assert not math.isinf(prod.prec) or (pa == INFINITE and pb == INFINITE)
