"""Property suites over generated corpora, grouped by theorem tag.

``run_suite`` checks each property on seeded instances.  With ``mutate``
every instance is corrupted in one coefficient first and the suite
counts how many corruptions the matching verifier catches.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from gmpy2 import mpq

from .diagonalize import DiagResult, SeriesMatrix, diagonalize, verify
from .errors import HahnSpecError, NotInvariant
from .fredholm import (
    analytic_max_modulus,
    random_analytic,
    random_ball_point,
    resolvent_bound_scan,
    vol_perturbation_check,
)
from .generators import gen_self_adjoint_operator, gen_test_matrix, instance_params
from .linalg import VectorC0, gram_schmidt, inner, normal_projection, volume, OrthoBasis, _residual, sup_norm_val
from .operators import (
    OperatorC0,
    adjoint,
    apply,
    is_compactoid,
    op_norm_val,
    op_power,
    resolvent_residual_val,
)
from .scalars import DEFAULT_PRECISION, INFINITE, LaurentSeries, Unknown, lower_bound, valuation
from .spectral import (
    EigenPair,
    NormalizedDecomposition,
    SpectralDecomposition,
    normalized_decomposition,
    random_probes,
    spectral_decompose,
    tail_projection_norms,
    verify_commuting_projection,
    verify_eigenspace_orthogonality,
    verify_eigs_tend_to_zero,
    verify_norm_max,
    verify_normalized,
    verify_reconstruction,
)

TAGS = ("a2", "a4", "a5", "a6", "a7", "b2", "c1", "c2", "c3", "app1", "app4", "app7")


@dataclass
class TagResult:
    tag: str
    passed: int = 0
    failed: int = 0
    notes: list = field(default_factory=list)

    @property
    def total(self):
        return self.passed + self.failed

    def record(self, ok: bool, note=None):
        if ok:
            self.passed += 1
        else:
            self.failed += 1
            if note and len(self.notes) < 5:
                self.notes.append(note)


# ---------------------------------------------------------------------------
# corruption helpers


def flip(f: LaurentSeries, e: int, delta=1) -> LaurentSeries:
    """f with delta added to its t^e coefficient (e below the precision)."""
    if e >= f.prec:
        raise ValueError(f"order {e} is beyond the precision {f.prec}")
    c = f.coeffs
    c[e] = c.get(e, 0) + delta
    return LaurentSeries(c, f.prec)


def corrupt_diag(res: DiagResult, rng: random.Random, N: int) -> DiagResult:
    """Flip one coefficient of U or of D at an order below N."""
    n = res.U.n
    e = rng.randrange(N)
    if rng.random() < 0.5:
        rows = [list(r) for r in res.U.rows]
        i, j = rng.randrange(n), rng.randrange(n)
        rows[i][j] = flip(rows[i][j], e)
        return DiagResult(SeriesMatrix(rows), res.D, res.precision, res.eigenvalues, res.gram,
                          res.factor_set, res.mode, res.certificate)
    rows = [list(r) for r in res.D.rows]
    k = rng.randrange(n)
    rows[k][k] = flip(rows[k][k], e)
    return DiagResult(res.U, SeriesMatrix(rows), res.precision, res.eigenvalues, res.gram,
                      res.factor_set, res.mode, res.certificate)


def _rebuild(pairs, N) -> SpectralDecomposition:
    by = {}
    for p in pairs:
        by.setdefault(lower_bound(valuation(p.lam)), []).append(p)
    levels = sorted(by)
    groups = [by[v] for v in levels]
    return SpectralDecomposition(levels, groups, [(p.lam, x) for g in groups for p in g for x in p.vectors], N)


def _pairs(dec):
    return [EigenPair(p.lam, list(p.vectors), p.source) for g in dec.groups for p in g]


def corrupt_eigenvalue(dec: SpectralDecomposition, rng: random.Random) -> SpectralDecomposition:
    """Flip one coefficient of one eigenvalue at an order in [v(lam), N)."""
    pairs = _pairs(dec)
    visible = [p for p in pairs if lower_bound(valuation(p.lam)) < dec.precision]
    if not visible:
        return None
    p = rng.choice(visible)
    v = lower_bound(valuation(p.lam))
    e = rng.randrange(v, dec.precision)
    # keep the valuation so the level structure is untouched
    p.lam = flip(p.lam, e) if e > v else flip(p.lam, e, 1 if p.lam.coeff(v) != -1 else 2)
    return _rebuild_same_levels(dec, pairs)


def _rebuild_same_levels(dec, pairs):
    groups, k = [], 0
    for g in dec.groups:
        groups.append(pairs[k:k + len(g)])
        k += len(g)
    flat = [(p.lam, x) for g in groups for p in g for x in p.vectors]
    return SpectralDecomposition(list(dec.levels), groups, flat, dec.precision)


def corrupt_cross(dec: SpectralDecomposition, rng: random.Random):
    """Add t^e at a coordinate in the support of another vector.

    Returns (decomposition, index of the corrupted vector in ``flat``) or
    None when there is a single vector.
    """
    pairs = _pairs(dec)
    flat = [(a, b) for a, p in enumerate(pairs) for b in range(len(p.vectors))]
    # the two vectors belong to different eigenvalues
    choices = [(u, w) for u in flat for w in flat if pairs[u[0]].lam != pairs[w[0]].lam]
    if not choices:
        return None
    (a, b), (c, d) = rng.choice(choices)
    x, y = pairs[a].vectors[b], pairs[c].vectors[d]
    j, s = rng.choice(sorted(y.entries.items()))
    # inner products are known below min(prec) + valuations; stay below that
    top = dec.precision - max(lower_bound(valuation(s)), 0) - 1
    e = rng.randint(0, max(top, 0))
    ent = dict(x.entries)
    ent[j] = flip(ent.get(j, LaurentSeries.zero()), e)
    pairs[a].vectors[b] = VectorC0(ent, x.prec)
    return _rebuild_same_levels(dec, pairs), (a, b)


def corrupt_norm_level(dec: SpectralDecomposition, rng: random.Random):
    """Give a top-level eigenvalue a coefficient one order below its valuation."""
    pairs = _pairs(dec)
    top = [p for p in pairs if lower_bound(valuation(p.lam)) == dec.levels[0]]
    p = rng.choice(top)
    p.lam = flip(p.lam, dec.levels[0] - 1)
    return _rebuild(pairs, dec.precision)


def corrupt_level_valuation(dec: SpectralDecomposition, rng: random.Random):
    """A coefficient one order below an eigenvalue's valuation, level left as filed."""
    pairs = _pairs(dec)
    p = rng.choice(pairs)
    p.lam = flip(p.lam, lower_bound(valuation(p.lam)) - 1)
    return _rebuild_same_levels(dec, pairs)


def corrupt_last_level(dec: SpectralDecomposition, rng: random.Random):
    """Flip an eigenvalue of the last level at an order in [v, N), or None."""
    pairs = _pairs(dec)
    last = pairs[len(pairs) - len(dec.groups[-1]):] if dec.groups else []
    last = [p for p in last if lower_bound(valuation(p.lam)) < dec.precision]
    if not last:
        return None
    p = rng.choice(last)
    v = lower_bound(valuation(p.lam))
    e = rng.randrange(v, dec.precision)
    p.lam = flip(p.lam, e) if e > v else flip(p.lam, e, 1 if p.lam.coeff(v) != -1 else 2)
    return _rebuild_same_levels(dec, pairs)


def corrupt_normalized(nd: NormalizedDecomposition, rng: random.Random):
    """Flip a unit coordinate of one normalized vector at an order below N."""
    flat = list(nd.flat)
    k = rng.randrange(len(flat))
    lam, x = flat[k]
    units = [i for i, s in sorted(x.entries.items()) if valuation(s) == 0]
    i = rng.choice(units)
    ent = dict(x.entries)
    ent[i] = flip(ent[i], rng.randrange(nd.precision))
    flat[k] = (lam, VectorC0(ent, x.prec))
    return NormalizedDecomposition(nd.levels, nd.groups, flat, nd.precision, [])


# ---------------------------------------------------------------------------
# corpora


def _diag_instances(size, seed, N, c=None):
    for k in range(size):
        n, depth, s = instance_params(k)
        A = gen_test_matrix(n, s + 7919 * seed, depth, N)
        yield A


def _operators(size, seed, N):
    out = []
    for k in range(size):
        T = gen_self_adjoint_operator(5000 + k + 7919 * seed, N)
        out.append((T, spectral_decompose(T, N)))
    return out


def _random_operator(rng: random.Random):
    """Not necessarily symmetric block plus a tail."""
    d = rng.randint(1, 4)
    block = [[LaurentSeries({rng.randint(0, 2): mpq(rng.randint(-3, 3), rng.randint(1, 2))}) for _ in range(d)]
             for _ in range(d)]
    tail, v = [], rng.randint(0, 2)
    for k in range(rng.randint(0, 4)):
        tail.append((d + 1 + k, LaurentSeries({v: mpq(rng.choice([-2, -1, 1, 2]), rng.randint(1, 3))})))
        v += rng.randint(1, 2)
    return OperatorC0(block, tail)


def _random_vector(rng: random.Random, dim: int, vmin=0):
    ent = {}
    for i in range(1, dim + 1):
        if rng.random() < 0.75:
            e = rng.randint(vmin, vmin + 2)
            ent[i] = LaurentSeries({e: mpq(rng.randint(-4, 4), rng.randint(1, 3)),
                                    e + 1: mpq(rng.randint(-2, 2), rng.randint(1, 2))})
    return VectorC0(ent)


def _independent_family(rng: random.Random, n: int, dim: int):
    while True:
        xs = [_random_vector(rng, dim) for _ in range(n)]
        v = volume(xs)
        if v != INFINITE and not isinstance(v, Unknown):
            return xs, v


# ---------------------------------------------------------------------------
# suites


def suite_b2(res: TagResult, size, seed, N, mutate, rng, c=None):
    kw = {} if c is None else {"c": c}
    for k, A in enumerate(_diag_instances(size, seed, N)):
        out = diagonalize(A, N, **kw)
        if mutate:
            out = corrupt_diag(out, rng, N)
            res.record(not verify(out, A, N).ok, f"instance {k}: corruption not detected")
        else:
            rep = verify(out, A, N)
            res.record(rep.ok, f"instance {k}: {rep}")


def suite_a6(res, ops, N, mutate, rng):
    for k, (T, dec) in enumerate(ops):
        probes = random_probes(T.size, 10, k)
        if mutate:
            bad = corrupt_eigenvalue(dec, rng)
            if bad is None:
                continue
            res.record(not verify_reconstruction(T, bad, probes),
                       f"operator {k}: reconstruction missed the corruption")
            res.record(not verify_eigs_tend_to_zero(corrupt_level_valuation(dec, rng)),
                       f"operator {k}: eigs_to_zero missed the corruption")
            last = corrupt_last_level(dec, rng)
            if last is not None:
                res.record(not tail_projection_norms(T, last)[1],
                           f"operator {k}: tail_projection missed the corruption")
            nd = normalized_decomposition(dec)
            if not nd.failures and nd.flat:
                res.record(not verify_normalized(T, corrupt_normalized(nd, rng)),
                           f"operator {k}: normalized missed the corruption")
            continue
        v = verify_reconstruction(T, dec, probes)
        tp = tail_projection_norms(T, dec)[1]
        z = verify_eigs_tend_to_zero(dec)
        nv = verify_normalized(T, normalized_decomposition(dec))
        res.record(v.ok and tp.ok and z.ok and nv.ok, f"operator {k}: {v}; {tp}; {z}; {nv}")


def suite_a7(res, ops, N, mutate, rng):
    for k, (T, dec) in enumerate(ops):
        if mutate:
            if not dec.levels:
                continue
            res.record(not verify_norm_max(T, corrupt_norm_level(dec, rng)), f"operator {k}")
            continue
        v = verify_norm_max(T, dec)
        res.record(v.ok, f"operator {k}: {v}")


def suite_a2(res, ops, N, mutate, rng):
    for k, (T, _) in enumerate(ops):
        T2 = op_power(T, 2)
        vt = op_norm_val(T)
        if mutate:
            # one coefficient below 2 v(T) in T^2
            rows = [list(r) for r in T2.block]
            i = rng.randrange(len(rows))
            rows[i][i] = flip(rows[i][i], 2 * vt - 1)
            T2 = OperatorC0(rows, T2.tail, T2.shift)
            res.record(op_norm_val(T2) != 2 * vt, f"operator {k}")
            continue
        res.record(op_norm_val(T2) == 2 * vt, f"operator {k}: v(T^2) = {op_norm_val(T2)}, v(T) = {vt}")


def suite_a5(res, ops, N, mutate, rng):
    for k, (T, dec) in enumerate(ops):
        if mutate:
            bad = corrupt_cross(dec, rng)
            if bad is None:
                continue
            res.record(not verify_eigenspace_orthogonality(bad[0]), f"operator {k}")
            continue
        v = verify_eigenspace_orthogonality(dec)
        res.record(v.ok, f"operator {k}: {v}")


def suite_a4(res, ops, N, mutate, rng):
    for k, (T, dec) in enumerate(ops):
        if mutate:
            bad = corrupt_cross(dec, rng)
            if bad is None:
                continue
            d2, (a, _) = bad
            p = [p for g in d2.groups for p in g][a]
            try:
                ok = verify_commuting_projection(T, OrthoBasis(p.vectors), N).ok
            except NotInvariant:
                ok = False
            res.record(not ok, f"operator {k}")
            continue
        for g in dec.groups:
            for p in g:
                v = verify_commuting_projection(T, OrthoBasis(p.vectors), N)
                res.record(v.ok, f"operator {k}: {v}")


def suite_c1(res, size, seed, N, mutate, rng):
    from .operators import RawMatrix

    for k in range(size):
        T = _random_operator(rng)
        if mutate:
            # a unit shift coefficient: the diagonal no longer tends to 0
            bad = OperatorC0(T.block, T.tail, flip(T.shift, 0))
            res.record(not is_compactoid(bad), f"operator {k}")
            continue
        ok = is_compactoid(T)
        a, b = rng.randint(1, 3), mpq(rng.randint(1, 5))
        good = RawMatrix(lambda i, j: LaurentSeries({a * i + abs(i - j): b}) if abs(i - j) <= 2 else None, 32)
        const = RawMatrix(lambda i, j: LaurentSeries({0: b}) if i == j else None, 32)
        res.record(ok and is_compactoid(good) and not is_compactoid(const), f"operator {k}")


def _adjoint_ok(T, Ts, rng):
    m = max(T.size, Ts.size)
    probes = [VectorC0.unit(i) for i in range(1, m + 1)] + [_random_vector(rng, m) for _ in range(3)]
    for x in probes:
        for y in probes:
            if not (inner(apply(T, x), y) - inner(x, apply(Ts, y))).is_zero():
                return False
    return True


def suite_c2(res, size, seed, N, mutate, rng):
    for k in range(size):
        T = _random_operator(rng)
        Ts = adjoint(T)
        if mutate:
            rows = [list(r) for r in Ts.block]
            i, j = rng.randrange(len(rows)), rng.randrange(len(rows))
            rows[i][j] = flip(rows[i][j], rng.randrange(N))
            res.record(not _adjoint_ok(T, OperatorC0(rows, Ts.tail, Ts.shift), rng), f"operator {k}")
            continue
        res.record(adjoint(Ts) == T and _adjoint_ok(T, Ts, rng), f"operator {k}")


def suite_c3(res, size, seed, N, mutate, rng):
    for k in range(size):
        dim = rng.randint(2, 5)
        xs, _ = _independent_family(rng, rng.randint(1, dim - 1), dim)
        b = gram_schmidt(xs)
        x = _random_vector(rng, dim)
        px = normal_projection(b, x)
        if mutate:
            i = rng.choice(sorted(b.vectors[0].entries))
            ent = dict(px.entries)
            ent[i] = flip(ent.get(i, LaurentSeries.zero()), rng.randrange(N))
            px = VectorC0(ent, px.prec)
        r = x - px
        ok = all(inner(r, v).is_zero() for v in b.vectors) and all(
            s.is_zero() for s in _residual(px, b).entries.values())
        res.record(ok != mutate, f"family {k}")


def suite_app1(res, size, seed, N, mutate, rng):
    for k in range(size):
        f = random_analytic(rng)
        samples = [random_ball_point(rng, f.v_r) for _ in range(10)]
        if mutate:
            bad = LaurentSeries({f.v_r - 1: 1})
            try:
                analytic_max_modulus(f, samples + [bad])
                caught = False
            except ValueError:
                caught = True
            res.record(caught, f"function {k}")
            continue
        rep = analytic_max_modulus(f, samples)
        res.record(rep.upper_ok, f"function {k}: {rep.status}")
        if rep.witness is None:
            res.notes.append(f"function {k}: WitnessNotFound")


def suite_app4(res, size, seed, N, mutate, rng):
    for k in range(size):
        xs, V = _independent_family(rng, rng.randint(1, 3), 4)
        eps = V + 1 + rng.randint(0, 2)
        if mutate:
            # one coefficient of size |t|^(v_n - 1) in a fresh coordinate
            b = OrthoBasis([], [])
            for x in xs[:-1]:
                r = _residual(x, b)
                b.vectors.append(r)
                b.self_inner.append(inner(r, r))
            vn = sup_norm_val(_residual(xs[-1], b))
            fresh = max(max(x.entries, default=0) for x in xs) + 1
            ys = xs[:-1] + [xs[-1] + VectorC0({fresh: LaurentSeries({vn - 1: 1})})]
            res.record(volume(ys) != V, f"family {k}")
            continue
        ok, _, _ = vol_perturbation_check(xs, eps, trials=1, seed=seed * 1000 + k)
        res.record(ok, f"family {k}")


def suite_app7(res, ops, N, mutate, rng, grid=8):
    from .fredholm import _neumann

    for k, (T, dec) in enumerate(ops):
        v_r = 1 - dec.levels[0] if dec.levels else 0
        if mutate:
            lam = LaurentSeries({v_r: rng.randint(1, grid)})
            R = _neumann(T, lam, N)
            rows = [list(r) for r in R.block]
            i, j = rng.randrange(len(rows)), rng.randrange(len(rows))
            rows[i][j] = flip(rows[i][j], rng.randrange(N))
            bad = OperatorC0(rows, R.tail, R.shift)
            res.record(lower_bound(resolvent_residual_val(T, lam, bad)) < N, f"operator {k}")
            continue
        rep = resolvent_bound_scan(T, v_r, grid, N, dec)
        res.record(rep.certified, f"operator {k}: scan not certified")


def run_suite(tags=None, seed=0, N=DEFAULT_PRECISION, size=8, mutate=False, grid=8):
    """Run the tagged suites; returns a list of TagResult in TAGS order."""
    tags = TAGS if tags is None else tuple(tags)
    unknown = set(tags) - set(TAGS)
    if unknown:
        raise ValueError(f"unknown tags: {sorted(unknown)}")
    ops = None
    if set(tags) & {"a2", "a4", "a5", "a6", "a7", "app7"}:
        ops = _operators(size, seed, N)
    out = []
    for tag in TAGS:
        if tag not in tags:
            continue
        res = TagResult(tag)
        rng = random.Random(f"{tag}:{seed}")
        try:
            if tag == "b2":
                suite_b2(res, size, seed, N, mutate, rng)
            elif tag in ("a2", "a4", "a5", "a6", "a7"):
                globals()[f"suite_{tag}"](res, ops, N, mutate, rng)
            elif tag == "app7":
                suite_app7(res, ops, N, mutate, rng, grid)
            else:
                globals()[f"suite_{tag}"](res, size, seed, N, mutate, rng)
        except HahnSpecError as exc:
            res.record(False, f"{type(exc).__name__}: {exc}")
        out.append(res)
    return out
