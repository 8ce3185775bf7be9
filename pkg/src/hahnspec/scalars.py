"""Exact arithmetic in the coefficient field K = Q((t)).

A :class:`LaurentSeries` stores finitely many rational coefficients plus an
absolute precision ``prec``: every coefficient at an exponent below ``prec``
is known (unstored ones are zero), nothing is known at or above it.  Exact
values (polynomials in t and 1/t) carry ``prec = INFINITE``.  Precision is
propagated the way interval p-adic arithmetic does it.

Rationals are ``gmpy2.mpq`` values throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Union

import gmpy2
from flint import fmpq, fmpq_poly
from gmpy2 import mpq

from .errors import (
    NegativeValuation,
    NotAPerfectSquare,
    NotInvertible,
    OddValuation,
    PrecisionExhausted,
    ResidueNotASquare,
)

Rational = type(mpq())

DEFAULT_PRECISION = 32
# |t| for reporting only; every decision compares integer valuations
RHO = mpq(1, 2)
INFINITE = math.inf

ZERO = mpq(0)
ONE = mpq(1)
HALF = mpq(1, 2)


@dataclass(frozen=True)
class Unknown:
    """Valuation of a series whose known coefficients all vanish below ``bound``."""

    bound: int

    def __str__(self):
        return f">={self.bound}"


Valuation = Union[int, float, Unknown]


def Q(x) -> Rational:
    """Coerce ints, strings like ``"3/4"``, Fractions and mpq to mpq."""
    if isinstance(x, Rational):
        return x
    if isinstance(x, Fraction):
        return mpq(x.numerator, x.denominator)
    if isinstance(x, str):
        return mpq(Fraction(x.strip()))
    if isinstance(x, float):
        raise TypeError("floats are not exact; pass a Fraction or string")
    return mpq(x)


def lower_bound(v: Valuation):
    """Integer (or inf) lower bound of a valuation."""
    return v.bound if isinstance(v, Unknown) else v


class LaurentSeries:
    __slots__ = ("_c", "prec")

    def __init__(self, coeffs=None, prec=INFINITE):
        if prec != INFINITE:
            prec = int(prec)
        c = {}
        if coeffs:
            items = coeffs.items() if isinstance(coeffs, dict) else coeffs
            for e, v in items:
                e = int(e)
                if e >= prec:
                    continue
                v = Q(v)
                if v:
                    c[e] = c.get(e, ZERO) + v
                    if not c[e]:
                        del c[e]
        self._c = c
        self.prec = prec

    @classmethod
    def _raw(cls, c, prec):
        s = object.__new__(cls)
        s._c = c
        s.prec = prec
        return s

    # constructors
    @classmethod
    def const(cls, q, prec=INFINITE) -> "LaurentSeries":
        return cls({0: q}, prec)

    @classmethod
    def monomial(cls, coeff, exp, prec=INFINITE) -> "LaurentSeries":
        return cls({exp: coeff}, prec)

    @classmethod
    def zero(cls, prec=INFINITE) -> "LaurentSeries":
        return cls._raw({}, prec)

    @classmethod
    def from_list(cls, coeffs, start=0, prec=INFINITE) -> "LaurentSeries":
        return cls({start + i: q for i, q in enumerate(coeffs)}, prec)

    # inspection
    @property
    def coeffs(self) -> dict:
        return dict(self._c)

    def terms(self):
        return sorted(self._c.items())

    def coeff(self, e: int) -> Rational:
        if e >= self.prec:
            raise PrecisionExhausted(f"coefficient t^{e} unknown (prec {self.prec})")
        return self._c.get(e, ZERO)

    @property
    def is_exact(self) -> bool:
        return self.prec == INFINITE

    def is_zero(self) -> bool:
        """True when no nonzero coefficient is known (exact zero or zero to precision)."""
        return not self._c

    def valuation(self) -> Valuation:
        return valuation(self)

    def truncate(self, n) -> "LaurentSeries":
        if n >= self.prec:
            return self
        return LaurentSeries._raw({e: v for e, v in self._c.items() if e < n}, n)

    def shift(self, k: int) -> "LaurentSeries":
        """Multiply by t^k (untwisted)."""
        return LaurentSeries._raw({e + k: v for e, v in self._c.items()}, self.prec + k)

    def scale(self, q) -> "LaurentSeries":
        q = Q(q)
        if not q:
            return LaurentSeries.zero()
        return LaurentSeries._raw({e: v * q for e, v in self._c.items()}, self.prec)

    def agrees(self, other, upto=INFINITE) -> bool:
        """Equality of all coefficients known on both sides (below ``upto``)."""
        other = as_series(other)
        n = min(self.prec, other.prec, upto)
        keys = set(self._c) | set(other._c)
        return all(self._c.get(e, ZERO) == other._c.get(e, ZERO) for e in keys if e < n)

    # arithmetic
    def __add__(self, other):
        if not isinstance(other, LaurentSeries):
            try:
                other = as_series(other)
            except TypeError:
                return NotImplemented
        return series_add(self, other)

    __radd__ = __add__

    def __neg__(self):
        return LaurentSeries._raw({e: -v for e, v in self._c.items()}, self.prec)

    def __sub__(self, other):
        if not isinstance(other, LaurentSeries):
            try:
                other = as_series(other)
            except TypeError:
                return NotImplemented
        return series_add(self, -other)

    def __rsub__(self, other):
        return as_series(other) - self

    def __mul__(self, other):
        if not isinstance(other, LaurentSeries):
            try:
                return self.scale(other)
            except TypeError:
                return NotImplemented
        return series_mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, LaurentSeries):
            q = Q(other)
            if not q:
                raise NotInvertible("division by zero")
            return self.scale(1 / q)
        return series_div(self, other)

    def __rtruediv__(self, other):
        return series_div(as_series(other), self)

    def __pow__(self, n: int):
        if n < 0:
            return series_inv(self) ** (-n)
        out = ONE_SERIES
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def __eq__(self, other):
        if not isinstance(other, LaurentSeries):
            try:
                other = as_series(other)
            except TypeError:
                return NotImplemented
        return self.prec == other.prec and self._c == other._c

    def __hash__(self):
        return hash((frozenset(self._c.items()), self.prec))

    def __str__(self):
        from .textfmt import format_series

        return format_series(self)

    def __repr__(self):
        return f"LaurentSeries({self})"


def as_series(x) -> LaurentSeries:
    if isinstance(x, LaurentSeries):
        return x
    if isinstance(x, (int, Rational, Fraction, str)):
        return LaurentSeries.const(Q(x))
    raise TypeError(f"cannot interpret {x!r} as a Laurent series")


ONE_SERIES = LaurentSeries._raw({0: ONE}, INFINITE)
ZERO_SERIES = LaurentSeries._raw({}, INFINITE)
T = LaurentSeries._raw({1: ONE}, INFINITE)


class FactorSet:
    """Symmetric normalized 2-cocycle c: Z x Z -> Q* twisting the product.

    ``FactorSet()`` is the trivial factor set c = 1.
    """

    def __init__(self, cocycle: Callable[[int, int], object] | None = None, name=None):
        self._f = cocycle
        self.name = name or ("trivial" if cocycle is None else getattr(cocycle, "__name__", "custom"))
        self._cache = {}

    @property
    def is_trivial(self) -> bool:
        return self._f is None

    def __call__(self, a: int, b: int) -> Rational:
        if self._f is None:
            return ONE
        key = (a, b)
        v = self._cache.get(key)
        if v is None:
            v = self._cache[key] = Q(self._f(a, b))
        return v

    def triple(self, a: int, b: int, e: int) -> Rational:
        return self(a, b) * self(a + b, e)

    @classmethod
    def trivial(cls) -> "FactorSet":
        return cls()

    @classmethod
    def power(cls, base=2) -> "FactorSet":
        """c(a, b) = base**(a*b)."""
        base = Q(base)
        return cls(lambda a, b: base ** (a * b), name=f"{base}^(ab)")

    def __repr__(self):
        return f"FactorSet({self.name})"


TRIVIAL = FactorSet()


def factor_set_check(c: FactorSet, rng: int) -> bool:
    """Check normalization, symmetry and the cocycle identity on [-rng, rng]^3."""
    if rng < 1:
        raise ValueError("range must be >= 1")
    span = range(-rng, rng + 1)
    for g in span:
        if c(0, g) != 1 or c(g, 0) != 1:
            return False
    for a in span:
        for b in span:
            cab = c(a, b)
            if not cab or cab != c(b, a):
                return False
            for g in span:
                if cab * c(a + b, g) != c(a, b + g) * c(b, g):
                    return False
    return True


def valuation(f: LaurentSeries) -> Valuation:
    if f._c:
        return min(f._c)
    if f.prec == INFINITE:
        return INFINITE
    return Unknown(f.prec)


def series_add(f: LaurentSeries, g: LaurentSeries) -> LaurentSeries:
    prec = min(f.prec, g.prec)
    c = {e: v for e, v in f._c.items() if e < prec}
    for e, v in g._c.items():
        if e < prec:
            s = c.get(e, ZERO) + v
            if s:
                c[e] = s
            else:
                c.pop(e, None)
    return LaurentSeries._raw(c, prec)


def series_mul(f: LaurentSeries, g: LaurentSeries, c: FactorSet = TRIVIAL) -> LaurentSeries:
    """Product sum_{a+b=e} f(a) g(b) c(a,b) with precision min(v(f)+prec(g), v(g)+prec(f))."""
    vf = lower_bound(valuation(f))
    vg = lower_bound(valuation(g))
    prec = min(vf + g.prec, vg + f.prec)
    if not f._c or not g._c:
        return LaurentSeries._raw({}, prec)
    twisted = not c.is_trivial
    if not twisted and len(f._c) * len(g._c) > 48:
        return _flint_mul(f, g, prec)
    out = {}
    for a, x in f._c.items():
        for b, y in g._c.items():
            e = a + b
            if e >= prec:
                continue
            p = x * y
            if twisted:
                p *= c(a, b)
            out[e] = out.get(e, ZERO) + p
    return LaurentSeries._raw({e: v for e, v in out.items() if v}, prec)


def _poly(f: LaurentSeries, start: int, length: int):
    coeffs = [0] * length
    for e, q in f._c.items():
        if e - start < length:
            coeffs[e - start] = fmpq(int(q.numerator), int(q.denominator))
    return fmpq_poly(coeffs)


def _flint_mul(f: LaurentSeries, g: LaurentSeries, prec) -> LaurentSeries:
    a, b = min(f._c), min(g._c)
    la = (max(f._c) if prec == INFINITE else min(max(f._c), prec - b - 1)) - a + 1
    lb = (max(g._c) if prec == INFINITE else min(max(g._c), prec - a - 1)) - b + 1
    p = _poly(f, a, la) * _poly(g, b, lb)
    out = {}
    top = INFINITE if prec == INFINITE else prec - a - b
    for k, q in enumerate(p.coeffs()):
        if q and k < top:
            out[a + b + k] = mpq(int(q.p), int(q.q))
    return LaurentSeries._raw(out, prec)


def series_inv(f: LaurentSeries, prec=None) -> LaurentSeries:
    """Multiplicative inverse by geometric-series recursion.

    Exact inputs that are not monomials are inverted to absolute precision
    ``prec`` (default ``DEFAULT_PRECISION``).
    """
    v = valuation(f)
    if v == INFINITE:
        raise NotInvertible("inverse of exact zero")
    if isinstance(v, Unknown):
        raise PrecisionExhausted(f"valuation unknown below {v.bound}; cannot invert")
    a = f._c[v]
    if f.is_exact and len(f._c) == 1:
        return LaurentSeries._raw({-v: 1 / a}, INFINITE)
    if f.is_exact:
        target = DEFAULT_PRECISION if prec is None else prec
    else:
        target = f.prec - 2 * v
        if prec is not None:
            target = min(target, prec)
    n = target + v  # number of coefficients, exponents -v .. target-1
    if n <= 0:
        return LaurentSeries._raw({}, target)
    inv_a = 1 / a
    u = [f._c.get(v + i, ZERO) * inv_a for i in range(n)]
    nz = [i for i in range(1, n) if u[i]]
    b = [inv_a] + [ZERO] * (n - 1)
    for k in range(1, n):
        s = ZERO
        for i in nz:
            if i > k:
                break
            bk = b[k - i]
            if bk:
                s += u[i] * bk
        b[k] = -s
    return LaurentSeries._raw({k - v: q for k, q in enumerate(b) if q}, target)


def series_div(f: LaurentSeries, g: LaurentSeries, prec=None) -> LaurentSeries:
    return series_mul(f, series_inv(g, prec))


def abs_value(f: LaurentSeries) -> float:
    """|f| = RHO**v(f) as a float, for reports."""
    v = valuation(f)
    if isinstance(v, Unknown):
        raise PrecisionExhausted("absolute value of a series that is zero to precision")
    if v == INFINITE:
        return 0.0
    return float(RHO) ** v


def residue(f: LaurentSeries) -> Rational:
    v = valuation(f)
    if isinstance(v, Unknown):
        if v.bound > 0:
            return ZERO
        raise PrecisionExhausted("residue undetermined")
    if v < 0:
        raise NegativeValuation(f"valuation {v} < 0: not in the unit ball")
    return f._c.get(0, ZERO)


def rational_sqrt(q) -> Rational:
    q = Q(q)
    if q < 0:
        raise NotAPerfectSquare(f"{q} is negative")
    num, den = q.numerator, q.denominator
    if not (gmpy2.is_square(num) and gmpy2.is_square(den)):
        raise NotAPerfectSquare(f"{q} is not the square of a rational")
    return mpq(gmpy2.isqrt(num), gmpy2.isqrt(den))


def hensel_sqrt(f: LaurentSeries, prec=None) -> LaurentSeries:
    """Square root with positive leading coefficient, lifted order by order.

    With f = a t^(2m) (1 + u), the unit part w = sqrt(1 + u) satisfies
    w_0 = 1 and 2 w_k = u_k - sum_{0<i<k} w_i w_{k-i}.
    """
    v = valuation(f)
    if v == INFINITE:
        return ZERO_SERIES
    if isinstance(v, Unknown):
        raise PrecisionExhausted("square root of a series that is zero to precision")
    if v % 2:
        raise OddValuation(f"valuation {v} is odd")
    m = v // 2
    a = f._c[v]
    try:
        s = rational_sqrt(a)
    except NotAPerfectSquare as exc:
        raise ResidueNotASquare(f"leading coefficient {a} is not a rational square") from exc
    if f.is_exact:
        target = DEFAULT_PRECISION if prec is None else prec
    else:
        target = f.prec - m
        if prec is not None:
            target = min(target, prec)
    n = target - m
    if n <= 0:
        return LaurentSeries._raw({}, target)
    inv_a = 1 / a
    u = [f._c.get(v + k, ZERO) * inv_a for k in range(n)]
    w = [ONE] + [ZERO] * (n - 1)
    for k in range(1, n):
        acc = u[k]
        for i in range(1, k):
            if w[i] and w[k - i]:
                acc -= w[i] * w[k - i]
        w[k] = acc * HALF
    g = LaurentSeries._raw({m + k: s * q for k, q in enumerate(w) if q}, target)
    if f.is_exact:
        # a terminating root of an exact series is itself exact
        cand = LaurentSeries._raw(dict(g._c), INFINITE)
        if series_mul(cand, cand) == f:
            return cand
    return g


def common_precision(values: Iterable[LaurentSeries]):
    return min((s.prec for s in values), default=INFINITE)
