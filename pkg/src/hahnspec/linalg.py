"""Finitely supported vectors of c0 over K, the bilinear form and distances.

``<x, y> = sum_n x_n y_n`` is symmetric but not positive; what makes it
usable is that the residue field Q is formally real, so that
``||x||**2 = |<x, x>|`` for every x.  That identity is what lets
``dist_to_span`` read the ultrametric distance off an orthogonal residual.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field

from gmpy2 import mpq

from .errors import LinearlyDependent, PrecisionExhausted
from .scalars import (
    INFINITE,
    RHO,
    LaurentSeries,
    Q,
    T,
    Unknown,
    ZERO_SERIES,
    as_series,
    lower_bound,
    series_div,
    valuation,
)


def min_valuation(series, ambient=INFINITE):
    """Minimal valuation over ``series`` plus an ambient zero-to-``ambient`` part."""
    known = INFINITE
    bound = ambient
    for s in series:
        v = valuation(s)
        if isinstance(v, Unknown):
            bound = min(bound, v.bound)
        elif v < known:
            known = v
    if known == INFINITE:
        return INFINITE if bound == INFINITE else Unknown(bound)
    if bound < known:
        raise PrecisionExhausted(
            f"an entry is only known to vanish below t^{bound}, under the minimum {known}"
        )
    return known


class VectorC0:
    """Vector of c0 with finitely many stored entries (indices start at 1).

    ``prec`` is the ambient precision: unstored coordinates are known to be
    zero below t**prec (``INFINITE`` for exact vectors).
    """

    __slots__ = ("entries", "prec")

    def __init__(self, entries=None, prec=INFINITE):
        ents = {}
        for i, s in (entries or {}).items():
            i = int(i)
            if i < 1:
                raise ValueError("indices are 1-based")
            s = as_series(s)
            if s.is_zero():
                prec = min(prec, s.prec)
                continue
            ents[i] = s
        self.entries = ents
        self.prec = prec

    @classmethod
    def unit(cls, i: int, coeff=1) -> "VectorC0":
        return cls({i: coeff})

    @classmethod
    def from_list(cls, values, prec=INFINITE) -> "VectorC0":
        return cls({i + 1: v for i, v in enumerate(values)}, prec)

    def get(self, i: int) -> LaurentSeries:
        s = self.entries.get(i)
        return s if s is not None else LaurentSeries.zero(self.prec)

    @property
    def support(self):
        return sorted(self.entries)

    def is_exact_zero(self) -> bool:
        return not self.entries and self.prec == INFINITE

    def __add__(self, other: "VectorC0") -> "VectorC0":
        out = {}
        for i in set(self.entries) | set(other.entries):
            out[i] = self.get(i) + other.get(i)
        return VectorC0(out, min(self.prec, other.prec))

    def __neg__(self):
        return VectorC0({i: -s for i, s in self.entries.items()}, self.prec)

    def __sub__(self, other: "VectorC0") -> "VectorC0":
        return self + (-other)

    def scale(self, c) -> "VectorC0":
        c = as_series(c)
        v = valuation(c)
        if v == INFINITE:
            return VectorC0()
        return VectorC0({i: s * c for i, s in self.entries.items()}, self.prec + lower_bound(v))

    def __rmul__(self, c):
        return self.scale(c)

    def truncate(self, n) -> "VectorC0":
        return VectorC0({i: s.truncate(n) for i, s in self.entries.items()}, min(self.prec, n))

    def agrees(self, other: "VectorC0") -> bool:
        keys = set(self.entries) | set(other.entries)
        return all(self.get(i).agrees(other.get(i)) for i in keys)

    def __eq__(self, other):
        if not isinstance(other, VectorC0):
            return NotImplemented
        return self.prec == other.prec and self.entries == other.entries

    def __hash__(self):
        return hash((frozenset(self.entries.items()), self.prec))

    def __repr__(self):
        from .textfmt import format_vector

        return f"VectorC0({format_vector(self)})"


def e(i: int) -> VectorC0:
    """Canonical basis vector e_i."""
    return VectorC0.unit(i)


def inner(x: VectorC0, y: VectorC0) -> LaurentSeries:
    acc = ZERO_SERIES
    bound = x.prec + y.prec
    for i, s in x.entries.items():
        other = y.entries.get(i)
        if other is not None:
            acc = acc + s * other
        elif y.prec != INFINITE:
            bound = min(bound, y.prec + lower_bound(valuation(s)))
    if x.prec != INFINITE:
        for i, s in y.entries.items():
            if i not in x.entries:
                bound = min(bound, x.prec + lower_bound(valuation(s)))
    return acc.truncate(bound)


def sup_norm_val(x: VectorC0):
    """Valuation form of the sup norm: the minimum entry valuation."""
    return min_valuation(x.entries.values(), x.prec)


def norm(x: VectorC0):
    """||x|| as an exact rational RHO**v (reporting only)."""
    v = sup_norm_val(x)
    if isinstance(v, Unknown):
        raise PrecisionExhausted("norm of a vector that is zero to precision")
    return mpq(0) if v == INFINITE else RHO**v


def check_norm_inner(x: VectorC0) -> bool:
    """``||x||**2 == |<x, x>|`` compared as valuations."""
    v = sup_norm_val(x)
    w = valuation(inner(x, x))
    if isinstance(v, Unknown) or isinstance(w, Unknown):
        raise PrecisionExhausted("norm identity undecidable at this precision")
    return 2 * v == w


@dataclass
class OrthoBasis:
    vectors: list
    self_inner: list = field(default_factory=list)

    def __post_init__(self):
        if not self.self_inner:
            self.self_inner = [inner(v, v) for v in self.vectors]

    def __len__(self):
        return len(self.vectors)

    def coefficient(self, x: VectorC0, i: int) -> LaurentSeries:
        return series_div(inner(x, self.vectors[i]), self.self_inner[i])


def gram_schmidt(vs) -> OrthoBasis:
    """Classical Gram-Schmidt: x_i = v_i - sum_{j<i} <v_i,x_j>/<x_j,x_j> x_j."""
    basis = OrthoBasis([], [])
    for k, v in enumerate(vs):
        x = v
        for j in range(len(basis)):
            x = x - basis.vectors[j].scale(basis.coefficient(v, j))
        if x.is_exact_zero():
            raise LinearlyDependent(f"vector {k + 1} lies in the span of its predecessors")
        n = inner(x, x)
        if isinstance(valuation(n), Unknown):
            raise PrecisionExhausted(f"<x_{k + 1}, x_{k + 1}> vanishes to precision {n.prec}")
        basis.vectors.append(x)
        basis.self_inner.append(n)
    return basis


def normal_projection(b: OrthoBasis, x: VectorC0) -> VectorC0:
    """P(x) = sum_i <x,x_i>/<x_i,x_i> x_i."""
    out = VectorC0()
    for i, v in enumerate(b.vectors):
        out = out + v.scale(b.coefficient(x, i))
    return out


def _residual(x: VectorC0, b: OrthoBasis) -> VectorC0:
    return x - normal_projection(b, x) if len(b) else x


def dist_to_span(x: VectorC0, vs):
    """Valuation of dist(x, span(vs)), read off the orthogonal residual."""
    b = gram_schmidt(vs) if vs else OrthoBasis([], [])
    return sup_norm_val(_residual(x, b))


def volume(vs):
    """Valuation of Vol(x_1..x_n) = prod_i dist(x_i, [x_j : j < i]).

    Infinite for dependent families; ``Unknown`` when a residual vanishes
    only to the working precision.
    """
    vs = list(vs)
    if not vs:
        raise ValueError("volume of an empty family is not defined")
    b = OrthoBasis([], [])
    total = 0
    for x in vs:
        r = _residual(x, b)
        v = sup_norm_val(r)
        if v == INFINITE:
            return INFINITE
        if isinstance(v, Unknown):
            return Unknown(total + v.bound)
        total += v
        b.vectors.append(r)
        b.self_inner.append(inner(r, r))
    return total


_SAMPLE_SCALARS = None


def _sample_scalars():
    global _SAMPLE_SCALARS
    if _SAMPLE_SCALARS is None:
        one = LaurentSeries.const(1)
        tinv = LaurentSeries.monomial(1, -1)
        base = [one, T, tinv, one + T]
        _SAMPLE_SCALARS = [ZERO_SERIES] + [s for b in base for s in (b, -b)]
    return _SAMPLE_SCALARS


def _norm_q(v):
    return mpq(0) if v == INFINITE else RHO**v


def _violates(vs, lams, t_param) -> bool:
    total = VectorC0()
    biggest = None
    for lam, x in zip(lams, vs):
        if lam.is_zero():
            continue
        y = x.scale(lam)
        total = total + y
        v = sup_norm_val(y)
        biggest = v if biggest is None else min(biggest, v)
    if biggest is None:
        return False
    lhs = t_param * _norm_q(biggest)
    w = min_valuation(total.entries.values(), total.prec)
    if isinstance(w, Unknown):
        # only a definite violation counts: ||sum|| < RHO**bound
        return lhs > RHO ** w.bound
    return lhs > _norm_q(w)


def is_t_orthogonal(vs, t_param=1, trials=0, seed=0, max_enum=6561) -> bool:
    """Check t*max||l_i x_i|| <= ||sum l_i x_i||.

    For t = 1 the check is exact: a family is orthogonal iff each member
    keeps its full norm as distance to the span of its predecessors.  For
    t < 1 scalar tuples are sampled, which can only refute.
    """
    vs = list(vs)
    t_param = Q(t_param)
    if not 0 < t_param <= 1:
        raise ValueError("t must lie in (0, 1]")
    if len(vs) <= 1:
        return True
    if t_param == 1:
        for i, x in enumerate(vs):
            try:
                d = dist_to_span(x, vs[:i]) if i else sup_norm_val(x)
            except LinearlyDependent:
                return False
            if d != sup_norm_val(x):
                return False
        return True
    scalars = _sample_scalars()
    n = len(vs)
    rng = random.Random(seed)
    if len(scalars) ** n <= max_enum:
        tuples = itertools.product(scalars, repeat=n)
    else:
        tuples = ([rng.choice(scalars) for _ in range(n)] for _ in range(max_enum))
    for lams in tuples:
        if _violates(vs, lams, t_param):
            return False
    for _ in range(trials):
        lams = [
            LaurentSeries.monomial(mpq(rng.randint(-5, 5), rng.randint(1, 4)), rng.randint(-2, 3))
            for _ in range(n)
        ]
        if _violates(vs, lams, t_param):
            return False
    return True
