import random

import pytest
from gmpy2 import mpq
from hypothesis import given, settings, strategies as st

from hahnspec.errors import LinearlyDependent, PrecisionExhausted
from hahnspec.linalg import (
    OrthoBasis,
    VectorC0,
    check_norm_inner,
    dist_to_span,
    e,
    gram_schmidt,
    inner,
    is_t_orthogonal,
    normal_projection,
    sup_norm_val,
    volume,
)
from hahnspec.scalars import INFINITE, LaurentSeries
from hahnspec.textfmt import format_vector, parse_vector

t = LaurentSeries.monomial(1, 1)


def V(*xs):
    return VectorC0.from_list(xs)


def test_inner_examples():
    assert inner(e(1) + e(2).scale(t), e(2)) == t
    assert inner(V(1, 1, 0), V(1, 1, 0)) == LaurentSeries.const(2)
    assert inner(e(1), e(2)).is_zero()


def test_sup_norm_examples():
    assert sup_norm_val(V(t, t**2, 0)) == 1
    assert sup_norm_val(VectorC0()) == INFINITE
    assert sup_norm_val(V(1, LaurentSeries.monomial(1, -1))) == -1


def test_norm_inner_relation():
    assert check_norm_inner(V(1, 1))
    assert check_norm_inner(V(t, t.scale(2)))
    assert check_norm_inner(V(1, t))


def test_gram_schmidt_examples():
    b = gram_schmidt([V(1, 1, 0), V(0, 1, 1)])
    assert b.vectors[0] == V(1, 1, 0)
    assert b.vectors[1] == V(mpq(-1, 2), mpq(1, 2), 1)
    assert inner(b.vectors[0], b.vectors[1]).is_zero()
    b = gram_schmidt([e(1), e(2)])
    assert b.vectors == [e(1), e(2)]
    with pytest.raises(LinearlyDependent):
        gram_schmidt([e(1), e(1)])


def test_projection_examples():
    assert normal_projection(OrthoBasis([e(1)]), e(1) + e(2).scale(t)) == e(1)
    b = OrthoBasis([V(1, 1)])
    p = normal_projection(b, V(1, 0))
    assert p == V(mpq(1, 2), mpq(1, 2))
    assert inner(V(1, 0) - p, V(1, 1)).is_zero()
    x = V(3, 3)
    assert normal_projection(b, x) == x


def test_t_orthogonality_examples():
    assert is_t_orthogonal([e(1), e(2)], 1)
    assert not is_t_orthogonal([e(1), e(1) + e(2).scale(t)], 1)
    assert is_t_orthogonal([V(t, 1)], mpq(1, 3))


def test_distance_examples():
    assert dist_to_span(e(2), [e(1)]) == 0
    assert dist_to_span(e(1) + e(2).scale(t), [e(1)]) == 1
    assert dist_to_span(V(2, 2), [V(1, 1)]) == INFINITE


def test_volume_examples():
    assert volume([e(1), e(1) + e(2).scale(t)]) == 1
    assert volume([e(1), e(2), e(3)]) == 0
    assert volume([e(1), e(1).scale(2)]) == INFINITE


def test_vector_text_roundtrip():
    x = V(1, t.scale(mpq(1, 2)))
    assert format_vector(x) == "{1: 1, 2: 1/2*t}"
    assert parse_vector("{1: 1, 2: 1/2*t}") == x


coef = st.integers(-4, 4)


@st.composite
def vectors(draw, dim=4):
    ent = {}
    for i in range(1, dim + 1):
        terms = draw(st.dictionaries(st.integers(-1, 3), coef.filter(bool), max_size=2))
        if terms:
            ent[i] = LaurentSeries(terms)
    return VectorC0(ent)


@given(st.lists(vectors(), min_size=1, max_size=3))
@settings(max_examples=80, deadline=None)
def test_gram_schmidt_output_is_orthogonal(vs):
    try:
        b = gram_schmidt(vs)
    except (LinearlyDependent, PrecisionExhausted):
        return
    for i in range(len(b)):
        for j in range(i):
            assert inner(b.vectors[i], b.vectors[j]).is_zero()


@given(st.lists(vectors(), min_size=1, max_size=3), vectors())
@settings(max_examples=80, deadline=None)
def test_projection_is_idempotent_and_normal(vs, x):
    try:
        b = gram_schmidt(vs)
    except (LinearlyDependent, PrecisionExhausted):
        return
    p = normal_projection(b, x)
    assert normal_projection(b, p).agrees(p)
    for v in b.vectors:
        assert inner(x - p, v).is_zero()


@given(vectors())
@settings(max_examples=100, deadline=None)
def test_norm_equals_inner_valuation(x):
    # Q is formally real, so no cancellation in <x,x>
    assert check_norm_inner(x)


def test_volume_invariant_under_adding_earlier_vectors():
    rng = random.Random(11)
    for _ in range(40):
        xs = [VectorC0({i: LaurentSeries({rng.randint(0, 2): rng.randint(-3, 3)}) for i in range(1, 5)})
              for _ in range(3)]
        V0 = volume(xs)
        c = LaurentSeries({rng.randint(0, 3): rng.randint(-2, 2)})
        ys = [xs[0], xs[1] + xs[0].scale(c), xs[2]]
        assert volume(ys) == V0
