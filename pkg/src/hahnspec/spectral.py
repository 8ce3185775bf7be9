"""Spectral decomposition of self-adjoint compactoid operators on c0.

The block is diagonalized with orthogonal (not necessarily unit) columns,
each tail entry is its own eigenpair, and

    T(x) = sum_n lam_n <x, x_n> / <x_n, x_n> x_n

is checked against ``apply`` together with the norm and orthogonality
statements that go with it.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from flint import fmpq_poly
from gmpy2 import mpq

from .diagonalize import SymSeriesMatrix, diagonalize
from .errors import (
    HahnSpecError,
    NotInvariant,
    PrecisionExhausted,
)
from .linalg import OrthoBasis, VectorC0, _residual, inner, min_valuation
from .operators import (
    OperatorC0,
    SpectrumReport,
    apply,
    is_compactoid,
    is_self_adjoint,
    op_norm_val,
)
from .scalars import (
    DEFAULT_PRECISION,
    INFINITE,
    ZERO_SERIES,
    LaurentSeries,
    Unknown,
    _poly,
    hensel_sqrt,
    lower_bound,
    series_div,
    valuation,
)


@dataclass
class EigenPair:
    lam: LaurentSeries
    vectors: list
    source: str = "block"


@dataclass
class SpectralDecomposition:
    levels: list  # valuations r_1 < r_2 < ... of |lam|
    groups: list  # per level: list of EigenPair
    flat: list  # (lam, x) pairs level by level
    precision: int = DEFAULT_PRECISION
    self_inner: list = field(default_factory=list)  # <x_n, x_n> along ``flat``

    def __post_init__(self):
        if not self.self_inner:
            self.self_inner = [inner(x, x) for _, x in self.flat]


@dataclass
class NormalizedDecomposition:
    levels: list
    groups: list
    flat: list  # (lam, x) with <x, x> = 1
    precision: int
    failures: list = field(default_factory=list)  # (position in flat, reason)


@dataclass
class Verdict:
    name: str
    ok: bool
    detail: str = ""

    def __str__(self):
        return f"{self.name}: {'pass' if self.ok else 'FAIL'}" + (f" ({self.detail})" if self.detail else "")

    def __bool__(self):
        return self.ok


def _zero_to(x: LaurentSeries, N) -> bool:
    """x vanishes in every known coefficient and is known at least below t^N."""
    return x.is_zero() and x.prec >= N


def _is_zero_eig(lam: LaurentSeries) -> bool:
    return lam.is_zero()


def eigen_decompose(T: OperatorC0, N=DEFAULT_PRECISION, c=None):
    """Eigenpairs of a self-adjoint compactoid T for its nonzero eigenvalues."""
    if not is_self_adjoint(T):
        raise ValueError("operator is not self-adjoint")
    if not is_compactoid(T):
        raise ValueError("operator is not compactoid (nonzero identity shift)")
    pairs = []
    d = T.d
    if d and all(T.block[i][j].is_zero() and T.block[i][j].is_exact
                 for i in range(d) for j in range(d) if i != j):
        # already diagonal: the eigenpairs are exact
        groups = {}
        for i in range(d):
            lam = T.block[i][i]
            if not _is_zero_eig(lam):
                groups.setdefault(_series_key(lam), EigenPair(lam, [], "block")).vectors.append(VectorC0.unit(i + 1))
        pairs.extend(groups.values())
    elif d:
        A = SymSeriesMatrix(T.block)
        kwargs = {} if c is None else {"c": c}
        # t^g0 is factored out, so eigenvectors to relative order N need
        # the block to order N + g0
        g0 = min(lower_bound(valuation(x)) for row in T.block for x in row)
        Nd = min(N + g0, A.prec) if g0 != INFINITE else N
        res = diagonalize(A, Nd, mode="orthogonal", **kwargs)
        vprec = Nd - res.certificate["shift"] if res.certificate["shift"] is not None else Nd
        groups = {}
        order = []
        for k in range(d):
            lam = res.eigenvalues[k]
            if _is_zero_eig(lam):
                continue
            col = VectorC0({i + 1: res.U[i, k].truncate(vprec) for i in range(d)}, INFINITE)
            key = _series_key(lam)
            if key not in groups:
                groups[key] = EigenPair(lam, [], "block")
                order.append(key)
            groups[key].vectors.append(col)
        pairs.extend(groups[k] for k in order)
    for i, s in T.tail:
        pairs.append(EigenPair(s, [VectorC0.unit(i)], f"tail:{i}"))
    return pairs


def _series_key(f: LaurentSeries):
    return (tuple(f.terms()), f.prec)


def spectral_decompose(T: OperatorC0, N=DEFAULT_PRECISION, c=None) -> SpectralDecomposition:
    pairs = eigen_decompose(T, N, c)
    by_level = {}
    for p in pairs:
        v = valuation(p.lam)
        if isinstance(v, Unknown):
            raise PrecisionExhausted("eigenvalue vanishes only to precision")
        by_level.setdefault(v, []).append(p)
    levels = sorted(by_level)
    groups = [by_level[v] for v in levels]
    flat = [(p.lam, x) for g in groups for p in g for x in p.vectors]
    return SpectralDecomposition(levels, groups, flat, N)


def spectrum_report(T: OperatorC0, N=DEFAULT_PRECISION) -> SpectrumReport:
    dec = spectral_decompose(T, N)
    rep = SpectrumReport()
    for g in dec.groups:
        for p in g:
            rep.eigenvalues.append((p.lam, len(p.vectors)))
            rep.source.append(p.source)
    return rep


# ---------------------------------------------------------------------------
# reconstruction


def reconstruct(dec: SpectralDecomposition, x: VectorC0) -> VectorC0:
    """sum_n lam_n <x, x_n> / <x_n, x_n> x_n."""
    out = VectorC0()
    for (lam, xn), nn in zip(dec.flat, dec.self_inner):
        coef = series_div(inner(x, xn), nn)
        out = out + xn.scale(lam * coef)
    return out


def reconstruction_matrix(dec: SpectralDecomposition, m: int):
    """Rows of sum_n lam_n x_n x_n^T / <x_n, x_n> on coordinates 1..m."""
    rows = [[ZERO_SERIES] * m for _ in range(m)]
    for (lam, xn), nn in zip(dec.flat, dec.self_inner):
        w = series_div(lam, nn)
        ent = [(i, s) for i, s in xn.entries.items() if i <= m]
        for i, si in ent:
            wi = w * si
            for j, sj in ent:
                rows[i - 1][j - 1] = rows[i - 1][j - 1] + wi * sj
    return rows


def _vec_agree(x: VectorC0, y: VectorC0, N) -> bool:
    diff = x - y
    if any(not _zero_to(s, N) for s in diff.entries.values()):
        return False
    return diff.prec >= N


def _apply_rows(rows, x: VectorC0) -> VectorC0:
    m = len(rows)
    out = {}
    for i in range(m):
        acc = ZERO_SERIES
        for j, s in x.entries.items():
            if j <= m:
                acc = acc + rows[i][j - 1] * s
        out[i + 1] = acc
    return VectorC0(out, x.prec)


class _PolyRows:
    """Square series matrix as t^v0 * (flint polynomials), for repeated products."""

    def __init__(self, rows):
        flat = [s for r in rows for s in r]
        known = [min(s.coeffs) for s in flat if not s.is_zero()]
        self.m = len(rows)
        self.v0 = min(known) if known else 0
        self.prec = min((s.prec for s in flat), default=INFINITE)
        if self.prec == INFINITE:
            top = max((max(s.coeffs) for s in flat if not s.is_zero()), default=self.v0)
            self.length = top - self.v0 + 1
        else:
            self.length = max(self.prec - self.v0, 0)
        self.polys = [[_poly(s, self.v0, self.length) for s in r] for r in rows]

    def apply(self, x: VectorC0) -> VectorC0:
        if not x.entries:
            return VectorC0({}, x.prec)
        w0 = min(min(s.coeffs) for s in x.entries.values())
        top = max(max(s.coeffs) for s in x.entries.values())
        exact = self.prec == INFINITE
        xl = top - w0 + 1 if exact else self.length
        xs = {j: _poly(s, w0, xl) for j, s in x.entries.items() if j <= self.m}
        prec = INFINITE if exact else self.prec + w0
        out = {}
        for i in range(self.m):
            acc = fmpq_poly()
            for j, p in xs.items():
                q = self.polys[i][j - 1]
                acc += q * p if exact else q.mul_low(p, self.length)
            out[i + 1] = LaurentSeries(
                {self.v0 + w0 + k: mpq(int(c.p), int(c.q)) for k, c in enumerate(acc.coeffs()) if c}, prec
            )
        return VectorC0(out, min(x.prec, prec))


def random_probes(m: int, count: int, seed=0):
    rng = random.Random(seed)
    probes = []
    for _ in range(count):
        ent = {}
        for i in range(1, m + 1):
            if rng.random() < 0.7:
                e = rng.randint(0, 2)
                ent[i] = LaurentSeries({e: mpq(rng.randint(-5, 5), rng.randint(1, 3))})
        probes.append(VectorC0(ent))
    return probes


def verify_reconstruction(T: OperatorC0, dec: SpectralDecomposition, probes=None, direct=2) -> Verdict:
    """apply(T, x) equals the decomposition sum on every probe.

    Canonical vectors of the active coordinates are always probed.  The
    sum is linear in x, so it is evaluated once as a matrix and applied to
    each probe; the first ``direct`` canonical probes also go through the
    literal sum as a cross-check.
    """
    m = T.size
    N = dec.precision
    if m == 0:
        return Verdict("reconstruction", True, "zero-dimensional")
    rows = _PolyRows(reconstruction_matrix(dec, m))
    if any(not x.is_exact for p in probes or () for x in p.entries.values()):
        raise ValueError("probes must be exact")
    canon = [VectorC0.unit(i) for i in range(1, m + 1)]
    probes = canon + list(probes or [])
    for k, x in enumerate(probes):
        tx = apply(T, x)
        if not _vec_agree(tx, rows.apply(x), N):
            return Verdict("reconstruction", False, f"probe {k + 1} disagrees")
        if k < direct and not _vec_agree(tx, reconstruct(dec, x), N):
            return Verdict("reconstruction", False, f"probe {k + 1} disagrees with the direct sum")
    return Verdict("reconstruction", True, f"{len(probes)} probes")


def verify_norm_max(T: OperatorC0, dec: SpectralDecomposition) -> Verdict:
    """||T|| = max |lam| as valuations, and ||T|| <= |t|^-1 max |lam|."""
    vt = op_norm_val(T)
    if not dec.levels:
        ok = vt == INFINITE
        return Verdict("norm_max", ok, "zero operator" if ok else f"v(T) = {vt} but no eigenvalues")
    vl = dec.levels[0]
    eq = vt == vl
    gap = lower_bound(vl) - lower_bound(vt)
    ineq = gap <= 1
    return Verdict("norm_max", eq and ineq, f"v(T) = {vt}, min v(lam) = {vl}, gap {gap}")


def verify_eigenspace_orthogonality(dec: SpectralDecomposition) -> Verdict:
    vecs = [x for _, x in dec.flat]
    N = dec.precision
    for a in range(len(vecs)):
        for b in range(a + 1, len(vecs)):
            ip = inner(vecs[a], vecs[b])
            if not _zero_to(ip, N):
                return Verdict("orthogonality", False, f"<x_{a + 1}, x_{b + 1}> = {ip}")
    return Verdict("orthogonality", True, f"{len(vecs)} vectors")


def verify_eigs_tend_to_zero(dec: SpectralDecomposition) -> Verdict:
    lv = dec.levels
    if any(a >= b for a, b in zip(lv, lv[1:])):
        return Verdict("eigs_to_zero", False, f"levels not increasing: {lv}")
    for r, g in zip(lv, dec.groups):
        for p in g:
            if valuation(p.lam) != r:
                return Verdict("eigs_to_zero", False, f"eigenvalue {p.lam} filed under level {r}")
    tail = [valuation(p.lam) for g in dec.groups for p in g if p.source.startswith("tail")]
    tail_sorted = sorted(tail)
    if any(a >= b for a, b in zip(tail_sorted, tail_sorted[1:])):
        return Verdict("eigs_to_zero", False, "tail valuations repeat")
    return Verdict("eigs_to_zero", True, f"levels {lv}")


# ---------------------------------------------------------------------------
# projections


def _coupled(T: OperatorC0, support):
    """Coordinates outside which TP - PT vanishes, for P supported on ``support``."""
    idx = set(support)
    d = T.d
    if any(i <= d for i in support):
        idx.update(range(1, d + 1))
    return sorted(idx)


def verify_commuting_projection(T: OperatorC0, basis: OrthoBasis, N=DEFAULT_PRECISION) -> Verdict:
    """TP = PT for the normal projection P onto span(basis), and T(M^perp) in M^perp.

    T is block diagonal (block plus diagonal tail), so both products vanish
    outside the coordinates coupled to the support of the basis.
    """
    for k, x in enumerate(basis.vectors):
        r = _residual(apply(T, x), basis)
        if any(not s.is_zero() for s in r.entries.values()):
            raise NotInvariant(f"T(x_{k + 1}) leaves the span")
    support = sorted({i for x in basis.vectors for i in x.entries})
    idx = _coupled(T, support)
    # P = sum x x^T / <x,x>, so TP = sum (Tx) x^T / <x,x> and PT = sum x (x^T T) / <x,x>
    pos = {i: k for k, i in enumerate(idx)}
    mm = len(idx)
    TP = [[ZERO_SERIES] * mm for _ in range(mm)]
    PT = [[ZERO_SERIES] * mm for _ in range(mm)]
    for x, nn in zip(basis.vectors, basis.self_inner):
        tx = [sum((T.entry(i, j) * s for j, s in x.entries.items()), ZERO_SERIES) for i in idx]
        xt = [sum((s * T.entry(j, i) for j, s in x.entries.items()), ZERO_SERIES) for i in idx]
        xs = [(pos[j], series_div(s, nn)) for j, s in x.entries.items()]
        for a in range(mm):
            for b, s in xs:
                if not tx[a].is_zero():
                    TP[a][b] = TP[a][b] + tx[a] * s
                if not xt[a].is_zero():
                    PT[b][a] = PT[b][a] + s * xt[a]
    for a, i in enumerate(idx):
        for b, j in enumerate(idx):
            if not (TP[a][b] - PT[a][b]).is_zero():
                return Verdict("commuting_projection", False, f"(TP - PT)[{i},{j}] != 0")
    for j in idx:
        y = _residual(VectorC0.unit(j), basis)
        ty = apply(T, y)
        for x in basis.vectors:
            if not inner(ty, x).is_zero():
                return Verdict("commuting_projection", False, f"T maps (e_{j})^perp part outside M^perp")
    return Verdict("commuting_projection", True, f"rank {len(basis)}")


def tail_projection_norms(T: OperatorC0, dec: SpectralDecomposition):
    """v(T Q_n) for Q_n = I - P_n, P_n projecting onto levels 1..n.

    T Q_n = T - sum over levels <= n of lam x x^T / <x, x>.  Returns
    (valuations, Verdict); the verdict asserts v(T Q_n) >= r_{n+1} and a
    strictly increasing sequence.
    """
    m = T.size
    R = [list(r) for r in T.matrix(m)]
    vals, detail = [], []
    ok = True
    k = 0
    for n, g in enumerate(dec.groups):
        for p in g:
            for x in p.vectors:
                w = series_div(p.lam, dec.self_inner[k])
                k += 1
                ent = list(x.entries.items())
                for i, si in ent:
                    wi = w * si
                    for j, sj in ent:
                        R[i - 1][j - 1] = R[i - 1][j - 1] - wi * sj
        flat = [s for r in R for s in r]
        try:
            v = min_valuation(flat)
        except PrecisionExhausted:
            v = Unknown(min(s.prec for s in flat))
        vals.append(v)
        nxt = dec.levels[n + 1] if n + 1 < len(dec.levels) else None
        # nothing at or beyond t^N is certified
        if nxt is not None and lower_bound(v) < min(nxt, dec.precision):
            ok = False
            detail.append(f"v(TQ_{n + 1}) = {v} < r_{n + 2} = {nxt}")
        if nxt is None and not (v == INFINITE or isinstance(v, Unknown) and v.bound >= dec.precision):
            ok = False
            detail.append(f"T Q_{n + 1} = {v} should vanish")
    lbs = [lower_bound(v) for v in vals]
    if any(a >= b for a, b in zip(lbs, lbs[1:]) if a < dec.precision):
        ok = False
        detail.append("sequence not increasing")
    return vals, Verdict("tail_projection", ok, "; ".join(detail))


def normalized_decomposition(dec: SpectralDecomposition) -> NormalizedDecomposition:
    """Divide each x_n by sqrt(<x_n, x_n>) where that square root exists in K."""
    flat, failures = [], []
    for k, ((lam, x), nn) in enumerate(zip(dec.flat, dec.self_inner)):
        try:
            s = hensel_sqrt(nn)
        except HahnSpecError as exc:
            failures.append((k, f"{type(exc).__name__}: {exc}"))
            flat.append((lam, x))
            continue
        flat.append((lam, x.scale(series_div(LaurentSeries.const(1), s))))
    return NormalizedDecomposition(dec.levels, dec.groups, flat, dec.precision, failures)


def verify_normalized(T: OperatorC0, nd: NormalizedDecomposition, probes=()) -> Verdict:
    """T(x) = sum lam_n <x, x_n> x_n when every vector could be normalized."""
    if nd.failures:
        return Verdict("normalized", True, f"skipped: {len(nd.failures)} vectors not normalizable")
    N = nd.precision
    for k, x in enumerate([VectorC0.unit(i) for i in range(1, T.size + 1)] + list(probes)):
        acc = VectorC0()
        for lam, xn in nd.flat:
            acc = acc + xn.scale(lam * inner(x, xn))
        if not _vec_agree(apply(T, x), acc, N):
            return Verdict("normalized", False, f"probe {k + 1} disagrees")
        nn_ok = all(_zero_to(inner(xn, xn) - 1, N) for _, xn in nd.flat)
        if not nn_ok:
            return Verdict("normalized", False, "<x_n, x_n> != 1")
    return Verdict("normalized", True, "")
