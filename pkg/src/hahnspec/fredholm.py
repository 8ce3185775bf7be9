"""Max-modulus, volume and resolvent instrumentation.

Valuations stand in for norms throughout: |x| = RHO**v, so a larger
valuation is a smaller norm and "bounded by" becomes ">=".
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from itertools import combinations

from gmpy2 import mpq

from .errors import NotInvertible, PrecisionExhausted, RadiusOutsideDT
from .linalg import VectorC0, sup_norm_val, volume
from .operators import (
    OperatorC0,
    ResolventQuery,
    apply,
    compose,
    is_self_adjoint,
    neumann_resolvent,
    op_add,
    op_norm_val,
    op_scale,
    resolvent_residual_val,
)
from .scalars import (
    DEFAULT_PRECISION,
    INFINITE,
    ONE_SERIES,
    ZERO_SERIES,
    LaurentSeries,
    Unknown,
    lower_bound,
    series_inv,
    valuation,
)


# ---------------------------------------------------------------------------
# analytic functions


@dataclass
class AnalyticSeries:
    """f(lam) = sum_n a_n lam^n on the ball of radius RHO**v_r."""

    coefficients: list
    v_r: int

    def __post_init__(self):
        if not self.coefficients:
            raise ValueError("need at least one coefficient")
        self.coefficients = [a if isinstance(a, VectorC0) else VectorC0(a) for a in self.coefficients]

    def __call__(self, lam) -> VectorC0:
        lam = lam if isinstance(lam, LaurentSeries) else LaurentSeries.const(lam)
        out = VectorC0()
        for a in reversed(self.coefficients):
            out = out.scale(lam) + a
        return out

    def bound(self):
        """min_n v(a_n) + n v_r, the valuation of max_n |a_n| r^n."""
        vals = []
        for n, a in enumerate(self.coefficients):
            v = sup_norm_val(a)
            if v != INFINITE:
                vals.append(lower_bound(v) + n * self.v_r)
        return min(vals) if vals else INFINITE

    def residue_polynomial(self):
        """Per coordinate, the coefficients (in c) of t^bound in f(c t^v_r)."""
        rhs = self.bound()
        if rhs == INFINITE:
            return {}
        polys = {}
        for n, a in enumerate(self.coefficients):
            for i, s in a.entries.items():
                q = s.coeff(rhs - n * self.v_r) if rhs - n * self.v_r < s.prec else 0
                if q:
                    polys.setdefault(i, {})[n] = q
        return polys


@dataclass
class MaxModulusReport:
    upper_ok: bool
    bound: object
    sample_vals: list
    witness: tuple | None  # (c, lam) attaining the bound
    residue_poly: dict = field(default_factory=dict)

    @property
    def status(self):
        if not self.upper_ok:
            return "UpperBoundViolated"
        return "ok" if self.witness is not None else "WitnessNotFound"

    def __bool__(self):
        return self.upper_ok


def analytic_max_modulus(f: AnalyticSeries, samples, grid=8) -> MaxModulusReport:
    """Check v(f(lam)) >= bound on samples and look for lam* = c t^v_r with equality."""
    rhs = f.bound()
    vals = []
    ok = True
    for lam in samples:
        lam = lam if isinstance(lam, LaurentSeries) else LaurentSeries.const(lam)
        vl = valuation(lam)
        if vl != INFINITE and lower_bound(vl) < f.v_r:
            raise ValueError(f"sample {lam} lies outside the ball (v = {vl} < {f.v_r})")
        v = sup_norm_val(f(lam))
        vals.append(v)
        if rhs != INFINITE and lower_bound(v) < rhs:
            ok = False
    witness = None
    if rhs == INFINITE:
        witness = (0, ZERO_SERIES)
    else:
        for c in range(1, grid + 1):
            lam = LaurentSeries.monomial(c, f.v_r)
            if sup_norm_val(f(lam)) == rhs:
                witness = (c, lam)
                break
    return MaxModulusReport(ok, rhs, vals, witness, {} if witness else f.residue_polynomial())


def random_analytic(rng: random.Random, max_terms=4, max_dim=3) -> AnalyticSeries:
    coeffs = []
    for _ in range(rng.randint(1, max_terms)):
        ent = {}
        for i in range(1, rng.randint(1, max_dim) + 1):
            if rng.random() < 0.8:
                v = rng.randint(-2, 3)
                ent[i] = LaurentSeries({v: mpq(rng.randint(-4, 4), rng.randint(1, 3)),
                                        v + 1: mpq(rng.randint(-4, 4), rng.randint(1, 3))})
        coeffs.append(VectorC0(ent))
    return AnalyticSeries(coeffs, rng.randint(-1, 2))


def random_ball_point(rng: random.Random, v_r: int) -> LaurentSeries:
    if rng.random() < 0.05:
        return ZERO_SERIES
    v = v_r + rng.randint(0, 3)
    return LaurentSeries({v: mpq(rng.choice([-3, -2, -1, 1, 2, 3]), rng.randint(1, 3)),
                          v + 1: mpq(rng.randint(-3, 3), rng.randint(1, 3))})


# ---------------------------------------------------------------------------
# volumes


@dataclass
class DeltaEstimate:
    """Delta_n(T) >= RHO**lower_bound, attained by ``witness``; Delta_n(T) <= RHO**upper_bound."""

    n: int
    lower_bound: object
    witness: tuple
    upper_bound: object = None

    @property
    def gap(self):
        if self.lower_bound == INFINITE or self.upper_bound == INFINITE:
            return 0 if self.lower_bound == self.upper_bound else INFINITE
        return lower_bound(self.lower_bound) - lower_bound(self.upper_bound)


def _column_vals(T: OperatorC0):
    return [sup_norm_val(apply(T, VectorC0.unit(j))) for j in range(1, T.size + 1)]


def _better(v, best):
    """True when valuation v is a strictly larger volume than best."""
    if best is None:
        return True
    if v == INFINITE:
        return False
    if best == INFINITE:
        return True
    return lower_bound(v) < lower_bound(best)


def delta_n_estimate(T: OperatorC0, n: int, extra_witnesses=()) -> DeltaEstimate:
    """Largest Vol(T x_1..T x_n) over canonical n-subsets and the extra witnesses.

    The upper bound is the sum of the n smallest column valuations: by
    Cauchy-Binet and the ultrametric Hadamard inequality no unit tuple does
    better.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if not T.shift.is_zero():
        raise ValueError("operator with an identity shift is not compactoid")
    m = T.size
    cols = {j: apply(T, VectorC0.unit(j)) for j in range(1, m + 1)}
    best, wit = None, ()
    if n <= m:
        for idx in combinations(range(1, m + 1), n):
            v = volume([cols[j] for j in idx])
            if _better(v, best):
                best, wit = v, tuple(VectorC0.unit(j) for j in idx)
    for tup in extra_witnesses:
        tup = tuple(tup)
        if len(tup) != n:
            raise ValueError("witness tuple has the wrong length")
        if any(lower_bound(sup_norm_val(x)) < 0 for x in tup):
            raise ValueError("witness vectors must have norm at most 1")
        v = volume([apply(T, x) for x in tup])
        if _better(v, best):
            best, wit = v, tup
    if best is None:
        best = INFINITE
    cv = sorted(lower_bound(v) for v in _column_vals(T) if v != INFINITE)
    upper = sum(cv[:n]) if len(cv) >= n else INFINITE
    return DeltaEstimate(n, best, wit, upper)


def delta_trend(T: OperatorC0, n_max: int):
    """(n, v(Delta_n)/n) for n = 1..n_max and a verdict on the trend.

    The averages should be nondecreasing and reach infinity once n exceeds
    the number of active coordinates.
    """
    out = []
    for n in range(1, n_max + 1):
        est = delta_n_estimate(T, n)
        v = est.lower_bound
        out.append((n, INFINITE if v == INFINITE else mpq(lower_bound(v), n)))
    avgs = [a for _, a in out]
    mono = all(a <= b for a, b in zip(avgs, avgs[1:]))
    vanish = all(a == INFINITE for n, a in out if n > T.size)
    return out, mono and vanish


def _perturb(x: VectorC0, eps_val: int, rng: random.Random, dim: int) -> VectorC0:
    ent = {}
    for i in range(1, dim + 1):
        if rng.random() < 0.7:
            e = eps_val + rng.randint(0, 2)
            ent[i] = LaurentSeries({e: mpq(rng.randint(-5, 5), rng.randint(1, 4))})
    return x + VectorC0(ent)


def vol_perturbation_check(xs, eps_val: int, trials=20, seed=0):
    """Vol(y) = Vol(x) whenever every |y_i - x_i| <= RHO**eps_val < Vol(x).

    Returns (ok, volume valuation, number of trials run).
    """
    xs = list(xs)
    V = volume(xs)
    if V == INFINITE or isinstance(V, Unknown):
        raise ValueError("volume must be nonzero and known")
    if eps_val <= V:
        raise ValueError(f"eps_val = {eps_val} must exceed the volume valuation {V}")
    if any(lower_bound(sup_norm_val(x)) < 0 for x in xs):
        raise ValueError("vectors must have norm at most 1")
    rng = random.Random(seed)
    dim = max(max(x.entries, default=0) for x in xs) + 1
    for _ in range(trials):
        ys = [_perturb(x, eps_val, rng, dim) for x in xs]
        if volume(ys) != V:
            return False, V, trials
    return True, V, trials


# ---------------------------------------------------------------------------
# resolvent scan


@dataclass
class ScanPoint:
    lam: LaurentSeries
    norm_val: object  # valuation of ||(I - lam T)^-1||, None when singular
    method: str
    residual: object = INFINITE


@dataclass
class ScanReport:
    v_r: int
    in_dt: bool
    points: list
    eigen_vals: list
    precision: int = DEFAULT_PRECISION

    @property
    def finite(self):
        return all(p.norm_val is not None and not isinstance(p.norm_val, Unknown) for p in self.points)

    @property
    def certified(self):
        """Finite everywhere and (I - lam T) R = I to the working precision."""
        return self.finite and all(lower_bound(p.residual) >= self.precision for p in self.points)

    @property
    def max_norm_val(self):
        vals = [lower_bound(p.norm_val) for p in self.points if p.norm_val is not None]
        return min(vals) if vals else INFINITE

    def __str__(self):
        lines = [f"v_r {self.v_r}  in D_T: {'yes' if self.in_dt else 'no'}"]
        for p in self.points:
            nv = "singular" if p.norm_val is None else str(p.norm_val)
            lines.append(f"  lam = {p.lam}: v(||R||) = {nv} [{p.method}] resid >= {lower_bound(p.residual)}")
        lines.append(f"max ||R|| = RHO^{self.max_norm_val}  finite: {'yes' if self.finite else 'no'}")
        return "\n".join(lines)


def _trunc_block(T: OperatorC0, N) -> OperatorC0:
    # tail entries stay exact so they never fold into the block
    return OperatorC0([[x.truncate(N) for x in row] for row in T.block], T.tail, T.shift)


def _neumann(T: OperatorC0, lam: LaurentSeries, N: int) -> OperatorC0:
    """sum (lam T)^k by doubling, truncated to precision N."""
    vt = op_norm_val(T)
    if vt == INFINITE:
        return OperatorC0.identity()
    step = lower_bound(valuation(lam)) + lower_bound(vt)
    need = math.ceil(N / step) + 1
    if need <= 4:
        return neumann_resolvent(T, ResolventQuery(lam, need))
    L = _trunc_block(op_scale(lam, T), N)
    S = op_add(OperatorC0.identity(), L)
    P = _trunc_block(compose(L, L), N)
    k = 2
    while k < need:
        # S <- S + L^k S doubles the number of terms
        S = _trunc_block(op_add(S, compose(P, S)), N)
        P = _trunc_block(compose(P, P), N)
        k *= 2
    return S


def _closed_form(T: OperatorC0, lam: LaurentSeries, N: int, dec) -> OperatorC0:
    """Sum of 1/(1 - lam mu) x x^T/<x,x> plus the identity off the eigenvectors."""
    d = T.d
    rows = [[ONE_SERIES if i == j else ZERO_SERIES for j in range(d)] for i in range(d)]
    tail = []
    for (mu, x), nn in zip(dec.flat, dec.self_inner):
        den = ONE_SERIES - lam * mu
        if den.is_zero():
            raise NotInvertible(f"1 - lam mu vanishes for mu = {mu}")
        w = series_inv(den, N) - ONE_SERIES
        if all(i > d for i in x.entries):
            (i, _), = x.entries.items()
            tail.append((i, w))
            continue
        w = w * series_inv(nn, N)
        for i, si in x.entries.items():
            for j, sj in x.entries.items():
                rows[i - 1][j - 1] = rows[i - 1][j - 1] + w * si * sj
    # tail entries of R - I need not have increasing valuations; fold them into the block
    if tail:
        m = max(i for i, _ in tail)
        full = [[rows[i][j] if i < d and j < d else (ONE_SERIES if i == j else ZERO_SERIES)
                 for j in range(m)] for i in range(m)]
        for i, w in tail:
            full[i - 1][i - 1] = ONE_SERIES + w
        return OperatorC0(full, (), ONE_SERIES)
    return OperatorC0(rows, (), ONE_SERIES)


def resolvent_bound_scan(T: OperatorC0, v_r: int, grid=8, N=DEFAULT_PRECISION, dec=None) -> ScanReport:
    """||(I - lam T)^-1|| at lam = c t^v_r and c t^(v_r+1), c = 1..grid, and lam = 0.

    r = RHO**v_r lies in D_T when v(mu) + v_r > 0 for every eigenvalue mu.
    Outside D_T the scan still runs and RadiusOutsideDT carries its report.
    """
    from .spectral import spectral_decompose

    vt = op_norm_val(T)
    if is_self_adjoint(T) and T.shift.is_zero():
        if dec is None:
            dec = spectral_decompose(T, N)
        eig = [lower_bound(valuation(mu)) for mu, _ in dec.flat]
        in_dt = all(v + v_r > 0 for v in eig)
    elif vt == INFINITE or lower_bound(vt) + v_r > 0:
        eig = []
        in_dt = True
    else:
        raise ValueError("D_T membership needs a self-adjoint compactoid operator or |r| ||T|| < 1")
    lams = [ZERO_SERIES] + [LaurentSeries.monomial(c, v_r + s) for s in (0, 1) for c in range(1, grid + 1)]
    points = []
    for lam in lams:
        if lam.is_zero():
            points.append(ScanPoint(lam, 0, "identity"))
            continue
        contractive = vt == INFINITE or lower_bound(valuation(lam)) + lower_bound(vt) > 0
        try:
            if contractive:
                R, method = _neumann(T, lam, N), "neumann"
            else:
                R, method = _closed_form(T, lam, N, dec), "eigen"
        except NotInvertible:
            points.append(ScanPoint(lam, None, "singular"))
            continue
        try:
            nv = op_norm_val(R)
        except PrecisionExhausted:
            nv = Unknown(N)
        res = resolvent_residual_val(T, lam, R)
        points.append(ScanPoint(lam, nv, method, res))
    report = ScanReport(v_r, in_dt, points, eig, N)
    if not in_dt:
        raise RadiusOutsideDT(f"an eigenvalue reciprocal lies in the ball of radius RHO^{v_r}", report)
    return report
