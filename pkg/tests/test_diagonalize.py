from math import comb

import pytest
from gmpy2 import mpq
from hypothesis import given, settings, strategies as st

from hahnspec.diagonalize import (
    OrderState,
    SeriesMatrix,
    SymSeriesMatrix,
    base_diagonalize,
    diagonalize,
    group_permutation,
    normalize_leading,
    orthogonalize_eigenbasis,
    step_order,
    verify,
)
from hahnspec.errors import IrrationalEigenvalue, NotOrthonormalizable, ScalarLeading
from hahnspec.generators import cayley, gen_test_matrix, random_orthogonal
from hahnspec.oracles import match_up_to_permutation, newton_eigenvalues
from hahnspec.ratmat import eye, is_diagonal, matmul, transpose
from hahnspec.scalars import INFINITE, FactorSet, LaurentSeries, residue
from hahnspec.textfmt import parse_series

t = LaurentSeries.monomial(1, 1)
N = 32


def catalan(k):
    return comb(2 * k, k) // (k + 1)


def worked_eigenvalues(N):
    # closed form (3 -+ sqrt(1 + 4t^2)) / 2; the t^{2k} coefficients are signed Catalan numbers
    low = {0: 1}
    high = {0: 2}
    for k in range(1, (N + 1) // 2):
        low[2 * k] = (-1) ** k * catalan(k - 1)
        high[2 * k] = -low[2 * k]
    return LaurentSeries(low, N), LaurentSeries(high, N)


def worked():
    return SymSeriesMatrix([[1, t], [t, 2]])


def test_worked_example_eigenvalues():
    res = diagonalize(worked(), N)
    low, high = worked_eigenvalues(N)
    assert res.D[0, 0] == low and res.D[1, 1] == high
    assert res.D[0, 0].truncate(8) == parse_series("1 - t^2 + t^4 - 2*t^6 (prec 8)")


def test_worked_example_first_order():
    res = diagonalize(worked(), N)
    U1 = [[res.U[i, j].coeff(1) for j in range(2)] for i in range(2)]
    U0 = [[res.U[i, j].coeff(0) for j in range(2)] for i in range(2)]
    assert U0 == [[1, 0], [0, 1]]
    assert U1 == [[0, 1], [-1, 0]]
    assert verify(res, worked(), N).ok


def test_order_one_step_matrices():
    st_ = OrderState.start([[[1, 0], [0, 2]], [[0, 1], [1, 0]]], [1, 1], [1, 2], 1)
    r = step_order(st_, 1)
    assert r.S == [[0, 0], [0, 0]]
    assert r.T == [[0, 1], [1, 0]]
    assert r.Q == [[0, 1], [-1, 0]]
    assert r.V == [[0, 0], [0, 0]]
    for d in range(2, 6):
        r = step_order(st_, d)
        assert r.S == transpose(r.S) and r.T == transpose(r.T)
        assert r.Q == [[-x for x in row] for row in transpose(r.Q)]


def test_diagonal_step_is_trapped():
    st_ = OrderState.start([[[1, 0], [0, 2]], [[3, 0], [0, 5]]], [1, 1], [1, 2], 1)
    r = step_order(st_, 1)
    assert r.Q == [[0, 0], [0, 0]] and r.U == [[0, 0], [0, 0]]
    tw = OrderState.start([[[1, 0], [0, 2]], [[0, 1], [1, 0]]], [1, 1], [1, 2], 1, c=FactorSet(lambda a, b: mpq(1)))
    assert step_order(tw, 1).U == [[0, 1], [-1, 0]]


def test_newton_oracle_agrees_on_worked_example():
    res = diagonalize(worked(), N)
    assert match_up_to_permutation(res.eigenvalues, newton_eigenvalues(worked(), N), N)
    assert match_up_to_permutation(newton_eigenvalues(worked(), N), list(worked_eigenvalues(N)), N)


def test_base_diagonalize():
    O, D = base_diagonalize([[1, 0], [0, 2]])
    assert O == eye(2) and D == [[1, 0], [0, 2]]
    with pytest.raises(IrrationalEigenvalue):
        base_diagonalize([[0, 1], [1, 1]])
    O0 = random_orthogonal(3, __import__("random").Random(4))
    D0 = [[mpq(3), 0, 0], [0, mpq(-1), 0], [0, 0, mpq(1, 2)]]
    A0 = matmul(matmul(transpose(O0), D0), O0)
    O, D = base_diagonalize(A0)
    assert matmul(transpose(O), O) == eye(3)
    assert sorted(D[i][i] for i in range(3)) == sorted(D0[i][i] for i in range(3))


def test_orthogonalize_eigenbasis():
    assert orthogonalize_eigenbasis([[[3, 4]]]) == [[mpq(3, 5)], [mpq(4, 5)]]
    assert orthogonalize_eigenbasis([[[1, 0]], [[0, 1]]]) == eye(2)
    with pytest.raises(NotOrthonormalizable):
        orthogonalize_eigenbasis([[[1, 1]]])


def test_grouping():
    perm, r = group_permutation([2, 1, 2])
    assert perm == [0, 2, 1] and r == 2
    assert group_permutation([1, 2, 3]) == ([0, 1, 2], 1)
    with pytest.raises(ScalarLeading):
        normalize_leading(SymSeriesMatrix([[3 + t**2, 0], [0, 3]], 8))


def test_diagonal_and_scalar_inputs():
    A = SymSeriesMatrix([[t, 0], [0, 1 + t**3]])
    res = diagonalize(A, 16)
    assert all(res.U[i, j] == LaurentSeries.const(int(i == j)) for i in range(2) for j in range(2))
    assert res.D[0, 0].agrees(A[0, 0]) and res.D[1, 1].agrees(A[1, 1])
    c = 2 + t - t**2
    S = SymSeriesMatrix([[c, 0, 0], [0, c, 0], [0, 0, c]])
    res = diagonalize(S, 16)
    assert all(res.U[i, j].agrees(LaurentSeries.const(int(i == j))) for i in range(3) for j in range(3))
    assert verify(res, S, 16).ok


def test_irrational_and_non_orthonormalizable():
    with pytest.raises(IrrationalEigenvalue):
        diagonalize(SymSeriesMatrix([[0, 1], [1, 1]]), 8)
    # eigenvectors (1, 1), (1, -1) have squared length 2
    B = SymSeriesMatrix([[1, 1 + t], [1 + t, 1]])
    with pytest.raises(NotOrthonormalizable):
        diagonalize(B, 8)
    res = diagonalize(B, 8, mode="orthogonal")
    assert verify(res, B, 8).ok
    assert [g for g in res.gram] == [2, 2]


def test_cayley_example():
    O = cayley([[0, -1], [1, 0]])
    assert matmul(transpose(O), O) == eye(2)
    assert O == [[0, 1], [-1, 0]]
    assert cayley([[0, 0], [0, 0]]) == eye(2)


def test_generator_round_trip():
    A = gen_test_matrix(4, 77, 0, N=None)
    res = diagonalize(A, 8)
    base = [[residue(A[i, j]) for j in range(4)] for i in range(4)]
    assert sorted(residue(x) for x in res.eigenvalues) == sorted(base_diagonalize(base)[1][i][i] for i in range(4))
    assert res.certificate["exact_U"]


def test_verify_negative_control():
    A = gen_test_matrix(3, 5, 2, N)
    res = diagonalize(A, N)
    assert verify(res, A, N).ok
    rows = [list(r) for r in res.U.rows]
    rows[0][1] = rows[0][1] + LaurentSeries.monomial(1, N - 1)
    bad = type(res)(SeriesMatrix(rows), res.D, res.precision, res.eigenvalues, res.gram,
                    res.factor_set, res.mode, res.certificate)
    assert not verify(bad, A, N).ok
    # a weaker bound still holds
    assert verify(res, A, N - 5).ok


def test_pair_split_matches_all():
    for seed in range(12):
        A = gen_test_matrix(1 + seed % 5, 300 + seed, seed % 4, 16)
        a = diagonalize(A, 16, split="all")
        b = diagonalize(A, 16, split="pair")
        assert verify(b, A, 16).ok
        assert match_up_to_permutation(a.eigenvalues, b.eigenvalues, 16)


def test_permutation_conjugation():
    A = gen_test_matrix(4, 9, 3, 20)
    P = [2, 0, 3, 1]
    B = SymSeriesMatrix([[A[P[i], P[j]] for j in range(4)] for i in range(4)], 20)
    assert match_up_to_permutation(diagonalize(A, 20).eigenvalues, diagonalize(B, 20).eigenvalues, 20)


def test_residue_reduction():
    A = gen_test_matrix(3, 41, 2, 16)
    res = diagonalize(A, 16)
    U0 = [[residue(res.U[i, j]) for j in range(3)] for i in range(3)]
    A0 = [[residue(A[i, j]) for j in range(3)] for i in range(3)]
    D0 = matmul(matmul(transpose(U0), A0), U0)
    assert is_diagonal(D0)
    assert [D0[i][i] for i in range(3)] == [residue(x) for x in res.eigenvalues]


def test_twisted_factor_set():
    c = FactorSet.power(2)
    for seed in range(6):
        A = gen_test_matrix(1 + seed % 4, 900 + seed, 1 + seed % 3, 16)
        assert verify(diagonalize(A, 16, c=c), A, 16).ok


def test_shifted_valuation_input():
    A = SymSeriesMatrix([[t**2, t**3], [t**3, 2 * t**2]], 20)
    res = diagonalize(A, 20)
    assert res.certificate["shift"] == 2
    assert verify(res, A, 20).ok


@given(st.integers(1, 5), st.integers(0, 10**6), st.integers(0, 4))
@settings(max_examples=25, deadline=None)
def test_generated_instances_verify(n, seed, depth):
    A = gen_test_matrix(n, seed, depth, 12)
    res = diagonalize(A, 12)
    assert verify(res, A, 12).ok
    assert match_up_to_permutation(res.eigenvalues, newton_eigenvalues(A, 12), 12)
