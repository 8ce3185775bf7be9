"""Acceptance criteria 1-8.  Each test prints one PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v -s`` or
``python3 tests/test_acceptance.py``.
"""

import random
import sys
import time
from math import comb

import pytest

from hahnspec.diagonalize import SymSeriesMatrix, diagonalize, verify
from hahnspec.fredholm import (
    analytic_max_modulus,
    random_analytic,
    random_ball_point,
    resolvent_bound_scan,
    vol_perturbation_check,
)
from hahnspec.generators import gen_self_adjoint_operator, gen_test_matrix, instance_params
from hahnspec.linalg import OrthoBasis, VectorC0
from hahnspec.operators import op_norm_val, op_power
from hahnspec.oracles import match_up_to_permutation, newton_eigenvalues
from hahnspec.scalars import FactorSet, LaurentSeries, lower_bound
from hahnspec.spectral import (
    random_probes,
    spectral_decompose,
    verify_commuting_projection,
    verify_eigenspace_orthogonality,
    verify_norm_max,
    verify_reconstruction,
)
from hahnspec.suite import (
    TagResult,
    _independent_family,
    corrupt_diag,
    suite_a2,
    suite_a4,
    suite_a5,
    suite_a6,
    suite_a7,
    suite_app1,
    suite_app4,
    suite_app7,
    suite_c1,
    suite_c2,
    suite_c3,
)

N = 32
N_DIAG = 200
N_OPS = 100


def report(capsys, k, ok, detail):
    with capsys.disabled():
        print(f"\ncriterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")


def diag_instance(k):
    n, depth, seed = instance_params(k)
    return gen_test_matrix(n, seed, depth, N)


@pytest.fixture(scope="module")
def diag_corpus():
    start = time.perf_counter()
    out = []
    for k in range(N_DIAG):
        A = diag_instance(k)
        res = diagonalize(A, N)
        out.append((A, res, verify(res, A, N)))
    return out, time.perf_counter() - start


@pytest.fixture(scope="module")
def op_corpus():
    start = time.perf_counter()
    ops = []
    for k in range(N_OPS):
        T = gen_self_adjoint_operator(5000 + k, N)
        ops.append((T, spectral_decompose(T, N)))
    return ops, time.perf_counter() - start


def test_criterion_1_end_to_end(diag_corpus, capsys):
    corpus, elapsed = diag_corpus
    bad = [k for k, (_, _, rep) in enumerate(corpus) if not rep.ok]
    exact = all(lower_bound(rep.orthogonality) >= N and lower_bound(rep.residual) >= N
                and lower_bound(rep.offdiag) >= N for _, _, rep in corpus)
    sizes = {A.n for A, _, _ in corpus}
    ok = not bad and exact and elapsed < 60 and max(sizes) <= 6
    report(capsys, 1, ok, f"{N_DIAG - len(bad)}/{N_DIAG} certified mod t^{N}, n in {sorted(sizes)}, {elapsed:.1f}s")
    assert not bad, bad
    assert exact
    assert elapsed < 60


def test_criterion_2_newton_oracle(diag_corpus, capsys):
    corpus, _ = diag_corpus
    bad = [k for k, (A, res, _) in enumerate(corpus)
           if not match_up_to_permutation([res.D[i, i] for i in range(A.n)], newton_eigenvalues(A, N), N)]
    report(capsys, 2, not bad, f"{N_DIAG - len(bad)}/{N_DIAG} spectra equal the Newton roots to t^{N}")
    assert not bad, bad


def _catalan_eigenvalues():
    low, high = {0: 1}, {0: 2}
    for k in range(1, N // 2):
        c = comb(2 * k - 2, k - 1) // k
        low[2 * k] = (-1) ** k * c
        high[2 * k] = -low[2 * k]
    return LaurentSeries(low, N), LaurentSeries(high, N)


def test_criterion_3_worked_fixture(capsys):
    t = LaurentSeries.monomial(1, 1)
    start = time.perf_counter()
    A = SymSeriesMatrix([[1, t], [t, 2]])
    res = diagonalize(A, N)
    rep = verify(res, A, N)
    elapsed = time.perf_counter() - start
    low, high = _catalan_eigenvalues()
    U0 = [[res.U[i, j].coeff(0) for j in range(2)] for i in range(2)]
    U1 = [[int(res.U[i, j].coeff(1)) for j in range(2)] for i in range(2)]
    ok = (rep.ok and res.D[0, 0] == low and res.D[1, 1] == high and U0 == [[1, 0], [0, 1]]
          and U1 == [[0, 1], [-1, 0]] and elapsed < 1)
    report(capsys, 3, ok, f"D = diag({str(low.truncate(6))[:-9]} + ..., {str(high.truncate(6))[:-9]} + ...), "
                          f"U1 = {U1}, {elapsed * 1000:.0f} ms")
    assert ok


def test_criterion_4_spectral_suite(op_corpus, capsys):
    ops, dec_time = op_corpus
    start = time.perf_counter()
    failures = []
    probes_run = 0
    for k, (T, dec) in enumerate(ops):
        probes = random_probes(T.size, 100, k)
        probes_run += T.size + len(probes)
        checks = {
            "reconstruction": verify_reconstruction(T, dec, probes).ok,
            "norm_max": verify_norm_max(T, dec).ok,
            "square": op_norm_val(op_power(T, 2)) == 2 * op_norm_val(T),
        }
        failures += [(k, name) for name, ok in checks.items() if not ok]
    elapsed = dec_time + time.perf_counter() - start
    shapes = max(T.d for T, _ in ops), max(len(T.tail) for T, _ in ops)
    ok = not failures and elapsed < 120
    report(capsys, 4, ok, f"{N_OPS} operators (block <= {shapes[0]}, tail <= {shapes[1]}), "
                          f"{probes_run} probes, {len(failures)} failures, {elapsed:.1f}s")
    assert not failures, failures
    assert elapsed < 120


def test_criterion_5_orthogonality(op_corpus, capsys):
    ops, _ = op_corpus
    failures, projections = [], 0
    for k, (T, dec) in enumerate(ops):
        if not verify_eigenspace_orthogonality(dec):
            failures.append((k, "cross inner product"))
        for g in dec.groups:
            for p in g:
                projections += 1
                if not verify_commuting_projection(T, OrthoBasis(p.vectors), N):
                    failures.append((k, "TP != PT"))
    report(capsys, 5, not failures, f"{N_OPS} operators, {projections} eigenspace projections, "
                                    f"{len(failures)} failures")
    assert not failures, failures


def test_criterion_6_factor_set(diag_corpus, capsys):
    corpus, _ = diag_corpus
    c = FactorSet.power(2)
    same = 0
    for A, _, plain in corpus[:50]:
        twisted = verify(diagonalize(A, N, c=c), A, N)
        same += twisted.ok == plain.ok and twisted.ok
    report(capsys, 6, same == 50, f"c = 2^(ab): {same}/50 instances certified mod t^{N} as with c = 1")
    assert same == 50


def test_criterion_7_appendix(op_corpus, capsys):
    ops, _ = op_corpus
    start = time.perf_counter()
    rng = random.Random(7)
    pairs = functions = attained = 0
    upper = True
    while pairs < 10_000:
        f = random_analytic(rng)
        samples = [random_ball_point(rng, f.v_r) for _ in range(10)]
        rep = analytic_max_modulus(f, samples)
        pairs += len(samples)
        functions += 1
        attained += rep.witness is not None
        upper = upper and rep.upper_ok
    rate = attained / functions

    stable = 0
    for k in range(500):
        rng = random.Random(20_000 + k)
        n = rng.randint(1, 4)
        xs, V = _independent_family(rng, n, n + 1)
        stable += vol_perturbation_check(xs, V + 1 + rng.randint(0, 2), trials=1, seed=k)[0]

    blowups = 0
    for T, dec in ops:
        v_r = 1 - dec.levels[0] if dec.levels else 0
        rep = resolvent_bound_scan(T, v_r, 8, N, dec)
        blowups += not rep.certified
    elapsed = time.perf_counter() - start
    ok = upper and rate >= 0.95 and stable == 500 and blowups == 0 and elapsed < 120
    report(capsys, 7, ok, f"max-modulus bound on {pairs} pairs: {'holds' if upper else 'VIOLATED'}, "
                          f"witness rate {rate:.3f}; volume stable {stable}/500; "
                          f"scans finite {N_OPS - blowups}/{N_OPS}; {elapsed:.1f}s")
    assert upper and rate >= 0.95
    assert stable == 500
    assert blowups == 0
    assert elapsed < 120


def test_criterion_8_negative_controls(diag_corpus, op_corpus, capsys):
    corpus, _ = diag_corpus
    ops, _ = op_corpus
    results = []

    b2 = TagResult("b2")
    rng = random.Random("b2")
    for k, (A, res, _) in enumerate(corpus):
        b2.record(not verify(corrupt_diag(res, rng, N), A, N).ok, f"instance {k}")
    results.append(b2)

    for tag, fn in (("a2", suite_a2), ("a4", suite_a4), ("a5", suite_a5), ("a6", suite_a6), ("a7", suite_a7)):
        r = TagResult(tag)
        fn(r, ops, N, True, random.Random(tag))
        results.append(r)
    r = TagResult("app7")
    suite_app7(r, ops[:30], N, True, random.Random("app7"))
    results.append(r)
    for tag, fn in (("c1", suite_c1), ("c2", suite_c2), ("c3", suite_c3), ("app1", suite_app1), ("app4", suite_app4)):
        r = TagResult(tag)
        fn(r, 50, 0, N, True, random.Random(tag))
        results.append(r)

    caught = sum(r.passed for r in results)
    total = sum(r.total for r in results)
    summary = " ".join(f"{r.tag}:{r.passed}/{r.total}" for r in results)
    ok = caught == total and all(r.total > 0 for r in results)
    report(capsys, 8, ok, f"{caught}/{total} corruptions detected ({summary})")
    assert ok, [(r.tag, r.notes) for r in results if r.failed]


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
