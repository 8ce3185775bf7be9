"""Operators on c0 over Q((t)): a finite block plus a diagonal tail.

An ``OperatorC0`` has matrix entries

    a_ij = block[i][j]                 for i, j <= d
    a_ii = shift + tail_i              for i > d
    0                                  otherwise

where the tail is a finite list of (index, series) with index > d and
strictly increasing valuations.  ``shift`` is a scalar multiple of the
identity; it is zero for compactoid operators and only appears so that
I - lam*T and Neumann partial sums stay representable.  Indices are 1-based.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

from gmpy2 import mpq

from .errors import NotContractive, PrecisionExhausted
from .linalg import VectorC0, min_valuation
from .scalars import (
    INFINITE,
    ONE_SERIES,
    ZERO_SERIES,
    LaurentSeries,
    Unknown,
    as_series,
    lower_bound,
    valuation,
)
from .scalars import _poly


def _zeroish(x: LaurentSeries) -> bool:
    return x.is_zero() and x.is_exact


class OperatorC0:
    __slots__ = ("block", "tail", "shift")

    def __init__(self, block=(), tail=(), shift=None):
        block = [[as_series(x) for x in row] for row in block]
        d = len(block)
        if any(len(row) != d for row in block):
            raise ValueError("block must be square")
        items = []
        for i, s in tail:
            i = int(i)
            s = as_series(s)
            if i <= d:
                raise ValueError(f"tail index {i} lies inside the {d}x{d} block")
            if not _zeroish(s):
                items.append((i, s))
        items.sort(key=lambda p: p[0])
        for (i, s), (j, _) in zip(items, items[1:]):
            if i == j:
                raise ValueError(f"tail index {i} repeated")
        prev = None
        for i, s in items:
            v = valuation(s)
            if isinstance(v, Unknown):
                raise ValueError(f"tail entry at {i} vanishes to precision")
            if prev is not None and v <= prev:
                raise ValueError(f"tail valuations must strictly increase (index {i})")
            prev = v
        self.block = block
        self.tail = items
        self.shift = ZERO_SERIES if shift is None else as_series(shift)

    # construction helpers

    @classmethod
    def identity(cls) -> "OperatorC0":
        return cls(shift=ONE_SERIES)

    @classmethod
    def zero(cls) -> "OperatorC0":
        return cls()

    @classmethod
    def diagonal(cls, values) -> "OperatorC0":
        values = [as_series(v) for v in values]
        n = len(values)
        return cls([[values[i] if i == j else ZERO_SERIES for j in range(n)] for i in range(n)])

    @property
    def d(self) -> int:
        return len(self.block)

    @property
    def size(self) -> int:
        """Largest index with a stored entry."""
        return max([self.d] + [i for i, _ in self.tail])

    def tail_dict(self):
        return dict(self.tail)

    def entry(self, i: int, j: int) -> LaurentSeries:
        d = self.d
        if i <= d and j <= d:
            return self.block[i - 1][j - 1]
        if i != j:
            return ZERO_SERIES
        t = self.tail_dict().get(i)
        if t is None:
            return self.shift
        return self.shift + t if not _zeroish(self.shift) else t

    def matrix(self, m: int):
        """Top-left m x m corner as rows of series."""
        tail = self.tail_dict()
        d = self.d
        rows = []
        for i in range(1, m + 1):
            row = []
            for j in range(1, m + 1):
                if i <= d and j <= d:
                    row.append(self.block[i - 1][j - 1])
                elif i == j:
                    t = tail.get(i)
                    row.append(self.shift if t is None else (t if _zeroish(self.shift) else self.shift + t))
                else:
                    row.append(ZERO_SERIES)
            rows.append(row)
        return rows

    def entries(self):
        """Every stored entry, the shift included."""
        out = [x for row in self.block for x in row]
        out.extend(s for _, s in self.tail)
        out.append(self.shift)
        return out

    def __eq__(self, other):
        if not isinstance(other, OperatorC0):
            return NotImplemented
        return self.block == other.block and self.tail == other.tail and self.shift == other.shift

    def __hash__(self):
        return hash((tuple(map(tuple, self.block)), tuple(self.tail), self.shift))

    def __repr__(self):
        from .textfmt import format_operator_json

        return f"OperatorC0({format_operator_json(self)})"


def _normalize(rows, diag, shift) -> OperatorC0:
    """Operator from full rows (d x d), diagonal entries beyond d and a shift.

    Diagonal entries whose tail part breaks the strictly increasing
    valuation order are folded into the block.
    """
    d = len(rows)
    items = []
    for i in sorted(diag):
        t = diag[i] - shift if not _zeroish(shift) else diag[i]
        if not _zeroish(t):
            items.append((i, t))
    cut = 0
    bound = None
    for k in range(len(items) - 1, -1, -1):
        v = valuation(items[k][1])
        if isinstance(v, Unknown) or (bound is not None and v >= bound):
            cut = k + 1
            break
        bound = v
    if cut:
        new_d = items[cut - 1][0]
        extra = dict(items[:cut])
        full = [list(r) + [ZERO_SERIES] * (new_d - d) for r in rows]
        for i in range(d + 1, new_d + 1):
            row = [ZERO_SERIES] * new_d
            t = extra.get(i)
            row[i - 1] = shift if t is None else (t if _zeroish(shift) else shift + t)
            full.append(row)
        rows = full
        items = items[cut:]
    return OperatorC0(rows, items, shift)


# ---------------------------------------------------------------------------
# criteria


@dataclass
class RawMatrix:
    """Infinite matrix given entrywise, for criteria on unstructured input."""

    entry: Callable[[int, int], object]
    window: int = 64


def _row_sup_vals(T: RawMatrix):
    out = []
    for i in range(1, T.window + 1):
        vals = []
        for j in range(1, T.window + 1):
            x = T.entry(i, j)
            if x is None:
                continue
            x = as_series(x)
            if not x.is_zero():
                vals.append(lower_bound(valuation(x)))
        out.append(min(vals) if vals else INFINITE)
    return out


def is_compactoid(T) -> bool:
    """lim_i sup_j |a_ij| = 0.

    For ``OperatorC0`` the row sups beyond the block are |shift + tail_i|;
    for a ``RawMatrix`` the row-sup valuations must strictly increase over
    the second half of the sample window.
    """
    if isinstance(T, RawMatrix):
        sups = _row_sup_vals(T)
        half = sups[len(sups) // 2:]
        if all(v == INFINITE for v in half):
            return True
        return all(a < b or b == INFINITE for a, b in zip(half, half[1:]))
    if not _zeroish(T.shift):
        return False
    vals = [valuation(s) for _, s in T.tail]
    return all(a < b for a, b in zip(vals, vals[1:]))


def adjoint(T: OperatorC0) -> OperatorC0:
    d = T.d
    return OperatorC0([[T.block[j][i] for j in range(d)] for i in range(d)], T.tail, T.shift)


def _same(x: LaurentSeries, y: LaurentSeries) -> bool:
    diff = x - y
    return diff.is_zero()


def is_self_adjoint(T: OperatorC0) -> bool:
    d = T.d
    return all(_same(T.block[i][j], T.block[j][i]) for i in range(d) for j in range(i + 1, d))


def op_norm_val(T: OperatorC0):
    """Valuation of ||T|| = sup |a_ij| (INFINITE for the zero operator)."""
    return min_valuation(T.entries())


# ---------------------------------------------------------------------------
# arithmetic


def apply(T: OperatorC0, x: VectorC0) -> VectorC0:
    out = {}
    d = T.d
    for i in range(1, d + 1):
        acc = ZERO_SERIES
        for j, s in x.entries.items():
            if j <= d:
                a = T.block[i - 1][j - 1]
                if not _zeroish(a):
                    acc = acc + a * s
        out[i] = acc
    tail = T.tail_dict()
    for j, s in x.entries.items():
        if j > d:
            a = tail.get(j, T.shift)
            if j in tail and not _zeroish(T.shift):
                a = T.shift + a
            if not _zeroish(a):
                out[j] = a * s
    prec = x.prec
    if prec != INFINITE:
        v = op_norm_val(T)
        prec = INFINITE if v == INFINITE else prec + lower_bound(v)
    return VectorC0(out, prec)


def _mat_mul(A, B):
    n = len(A)
    if n > 1:
        return _flint_mat_mul(A, B)
    brows = [[(j, b) for j, b in enumerate(B[k]) if not _zeroish(b)] for k in range(n)]
    out = []
    for i in range(n):
        acc = [ZERO_SERIES] * n
        for k, a in enumerate(A[i]):
            if _zeroish(a):
                continue
            for j, b in brows[k]:
                acc[j] = acc[j] + a * b
        out.append(acc)
    return out


def _as_polys(M):
    """Entries as (poly or None, valuation bound, prec), all offset by a common start."""
    starts = [min(x._c) for row in M for x in row if x._c]
    start = min(starts, default=0)
    out = []
    for row in M:
        prow = []
        for x in row:
            if _zeroish(x):
                prow.append(None)
                continue
            v = lower_bound(valuation(x))
            poly = _poly(x, start, max(x._c) - start + 1) if x._c else None
            prow.append((poly, v, x.prec))
        out.append(prow)
    return start, out


def _flint_mat_mul(A, B):
    """Same products and precisions as the entrywise loop, with one conversion per entry."""
    sa, PA = _as_polys(A)
    sb, PB = _as_polys(B)
    n = len(A)
    brows = [[(j, b) for j, b in enumerate(PB[k]) if b is not None] for k in range(n)]
    out = []
    for i in range(n):
        polys = [None] * n
        precs = [INFINITE] * n
        touched = [False] * n
        for k, a in enumerate(PA[i]):
            if a is None:
                continue
            pa, va, qa = a
            for j, (pb, vb, qb) in brows[k]:
                touched[j] = True
                precs[j] = min(precs[j], va + qb, vb + qa)
                if pa is not None and pb is not None:
                    prod = pa * pb
                    polys[j] = prod if polys[j] is None else polys[j] + prod
        row = []
        for j in range(n):
            if not touched[j]:
                row.append(ZERO_SERIES)
                continue
            prec, c = precs[j], {}
            if polys[j] is not None:
                for k, q in enumerate(polys[j].coeffs()):
                    e = sa + sb + k
                    if q and e < prec:
                        c[e] = mpq(int(q.p), int(q.q))
            row.append(LaurentSeries(c, prec))
        out.append(row)
    return out


def compose(S: OperatorC0, T: OperatorC0) -> OperatorC0:
    """S o T.  Tails multiply entrywise; the block grows to the larger of the two."""
    d = max(S.d, T.d)
    rows = _mat_mul(S.matrix(d), T.matrix(d))
    st, tt = S.tail_dict(), T.tail_dict()
    diag = {}
    for i in set(st) | set(tt):
        if i > d:
            diag[i] = S.entry(i, i) * T.entry(i, i)
    shift = S.shift * T.shift
    return _normalize(rows, diag, shift)


def op_add(S: OperatorC0, T: OperatorC0) -> OperatorC0:
    d = max(S.d, T.d)
    A, B = S.matrix(d), T.matrix(d)
    rows = [[a + b for a, b in zip(ra, rb)] for ra, rb in zip(A, B)]
    st, tt = S.tail_dict(), T.tail_dict()
    diag = {i: S.entry(i, i) + T.entry(i, i) for i in set(st) | set(tt) if i > d}
    return _normalize(rows, diag, S.shift + T.shift)


def op_scale(c, T: OperatorC0) -> OperatorC0:
    c = as_series(c)
    rows = [[c * x for x in row] for row in T.block]
    return _normalize(rows, {i: c * T.entry(i, i) for i, _ in T.tail}, c * T.shift)


def op_sub(S: OperatorC0, T: OperatorC0) -> OperatorC0:
    return op_add(S, op_scale(-1, T))


def op_power(T: OperatorC0, n: int) -> OperatorC0:
    if n < 0:
        raise ValueError("negative power")
    out = OperatorC0.identity()
    base = T
    while n:
        if n & 1:
            out = compose(out, base)
        n >>= 1
        if n:
            base = compose(base, base)
    return out


def power_norm_seq(T: OperatorC0, N: int):
    """[valuation(T^n) / n for n = 1..N]; INFINITE once T^n = 0."""
    if N < 1:
        raise ValueError("N must be at least 1")
    out = []
    P = T
    for n in range(1, N + 1):
        if n > 1:
            P = compose(P, T)
        v = op_norm_val(P)
        if isinstance(v, Unknown):
            raise PrecisionExhausted(f"T^{n} vanishes only to precision {v.bound}")
        out.append(INFINITE if v == INFINITE else mpq(v, n))
    return out


def truncate(T: OperatorC0, n: int) -> OperatorC0:
    """T_n: the top-left n x n corner."""
    if n < 1:
        raise ValueError("n must be at least 1")
    m = min(n, T.size)
    return OperatorC0(T.matrix(m))


def truncate_precision(T: OperatorC0, N) -> OperatorC0:
    """Every entry truncated to absolute precision N."""
    shift = T.shift.truncate(N)
    diag = {i: (s if _zeroish(T.shift) else T.shift + s).truncate(N) for i, s in T.tail}
    return _normalize([[x.truncate(N) for x in row] for row in T.block], diag, shift)


# ---------------------------------------------------------------------------
# resolvents


@dataclass
class ResolventQuery:
    lam: LaurentSeries
    terms: int

    def __post_init__(self):
        self.lam = as_series(self.lam)
        if self.terms < 1:
            raise ValueError("terms must be at least 1")


def neumann_resolvent(T: OperatorC0, q: ResolventQuery) -> OperatorC0:
    """sum_{n < terms} (lam T)^n, defined when |lam| ||T|| < 1."""
    lam = q.lam
    vl = valuation(lam)
    if vl == INFINITE:
        return OperatorC0.identity()
    vt = op_norm_val(T)
    if vt == INFINITE:
        return OperatorC0.identity()
    if lower_bound(vl) + lower_bound(vt) <= 0:
        raise NotContractive(
            f"|lam T| >= 1 (v(lam) + v(T) = {lower_bound(vl) + lower_bound(vt)}); use the eigen-decomposition"
        )
    L = op_scale(lam, T)
    out = OperatorC0.identity()
    P = OperatorC0.identity()
    for _ in range(1, q.terms):
        P = compose(P, L)
        out = op_add(out, P)
    return out


def resolvent_residual_val(T: OperatorC0, lam, R: OperatorC0):
    """Valuation of (I - lam T) R - I."""
    lam = as_series(lam)
    M = op_sub(OperatorC0.identity(), op_scale(lam, T))
    E = op_sub(compose(M, R), OperatorC0.identity())
    try:
        return op_norm_val(E)
    except PrecisionExhausted:
        # known entries all lie beyond the smallest precision: zero to that precision
        return Unknown(min(x.prec for x in E.entries() if isinstance(valuation(x), Unknown)))


@dataclass
class SpectrumReport:
    """Nonzero eigenvalues with multiplicities, by increasing valuation."""

    eigenvalues: list = field(default_factory=list)  # (LaurentSeries, multiplicity)
    source: list = field(default_factory=list)  # "block" or "tail:<index>"

    def valuations(self):
        return [valuation(lam) for lam, _ in self.eigenvalues]
