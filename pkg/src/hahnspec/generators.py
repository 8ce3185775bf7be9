"""Random test instances: symmetric series matrices and c0 operators."""

from __future__ import annotations

import random

from gmpy2 import mpq

from .diagonalize import SymSeriesMatrix
from .ratmat import eye, inverse, matadd, matmul, matsub, transpose
from .scalars import DEFAULT_PRECISION, INFINITE, LaurentSeries, ZERO


def _rand_q(rng, num=3, den=3):
    return mpq(rng.randint(-num, num), rng.randint(1, den))


def cayley(S):
    """O = (I - S)(I + S)^-1, orthogonal over Q for antisymmetric S."""
    n = len(S)
    I = eye(n)
    return matmul(matsub(I, S), inverse(matadd(I, S)))


def random_antisymmetric(n, rng):
    S = [[ZERO] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            q = _rand_q(rng, 2, 2)
            S[i][j] = q
            S[j][i] = -q
    return S


def random_orthogonal(n, rng):
    return cayley(random_antisymmetric(n, rng))


def gen_test_matrix(n, seed, t_depth, N=DEFAULT_PRECISION, S=None, D0=None, distinct=True):
    """A = O^T D0 O + sum_{1<=g<=t_depth} t^g * (random symmetric), entries known to t^N.

    With ``distinct`` the residue eigenvalues D0 are pairwise distinct, so
    the rational base step always succeeds.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = random.Random(seed)
    if S is None:
        S = random_antisymmetric(n, rng)
    O = cayley([[mpq(x) for x in r] for r in S])
    if D0 is None:
        if distinct:
            D0 = [mpq(x, 2) for x in rng.sample(range(-18, 19), n)]
        else:
            D0 = [mpq(rng.randint(-2, 2)) for _ in range(n)]
    D = [[D0[i] if i == j else ZERO for j in range(n)] for i in range(n)]
    A0 = matmul(matmul(transpose(O), D), O)
    coeffs = [[{0: A0[i][j]} for j in range(n)] for i in range(n)]
    for g in range(1, t_depth + 1):
        for i in range(n):
            for j in range(i, n):
                q = _rand_q(rng)
                if q:
                    coeffs[i][j][g] = q
                    coeffs[j][i][g] = q
    prec = INFINITE if N is None else N
    return SymSeriesMatrix([[LaurentSeries(coeffs[i][j], prec) for j in range(n)] for i in range(n)])


def instance_params(k):
    """(n, t_depth, seed) for the k-th instance of the standard suite."""
    return 1 + k % 6, (k // 6) % 5, 1000 + k


def gen_self_adjoint_operator(seed, N=DEFAULT_PRECISION, max_block=5, max_tail=8):
    """Self-adjoint compactoid operator: t^s * (symmetric block) plus a diagonal tail.

    Block entries are exact; the tail has strictly increasing valuations.
    ``N`` is unused for the entries and kept for a uniform signature.
    """
    from .operators import OperatorC0

    rng = random.Random(seed)
    d = rng.randint(1, max_block)
    depth = rng.randint(0, 3)
    s = rng.randint(0, 2)
    # nonzero residue eigenvalues keep every block eigenvalue at valuation s
    D0 = [mpq(x, 2) for x in rng.sample([x for x in range(-18, 19) if x], d)]
    A = gen_test_matrix(d, rng.randint(0, 10**9), depth, N=None, D0=D0)
    block = [[x.shift(s) for x in row] for row in A.rows]
    tail = []
    v = rng.randint(0, 3)
    for k in range(rng.randint(0, max_tail)):
        c = _rand_q(rng)
        if c == 0:
            c = mpq(1)
        extra = {v + 1: _rand_q(rng)} if rng.random() < 0.5 else {}
        tail.append((d + 1 + k, LaurentSeries({v: c, **extra})))
        v += rng.randint(1, 3)
    return OperatorC0(block, tail)
