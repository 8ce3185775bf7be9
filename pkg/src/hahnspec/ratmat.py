"""Dense rational matrices (lists of lists of mpq) and small exact algorithms."""

from __future__ import annotations

from functools import reduce
from operator import mul

from flint import fmpq, fmpq_poly
from gmpy2 import mpq

from .scalars import ONE, ZERO, Q


def eye(n):
    return [[ONE if i == j else ZERO for j in range(n)] for i in range(n)]


def zeros(n, m=None):
    return [[ZERO] * (n if m is None else m) for _ in range(n)]


def transpose(A):
    return [list(r) for r in zip(*A)] if A else []


def matmul(A, B):
    Bt = list(zip(*B))
    return [[sum(map(mul, row, col), ZERO) for col in Bt] for row in A]


def matadd(A, B):
    return [[x + y for x, y in zip(r, s)] for r, s in zip(A, B)]


def matsub(A, B):
    return [[x - y for x, y in zip(r, s)] for r, s in zip(A, B)]


def matscale(A, q):
    return [[x * q for x in r] for r in A]


def is_zero(A) -> bool:
    return not any(x for r in A for x in r)


def is_diagonal(A) -> bool:
    return all(not A[i][j] for i in range(len(A)) for j in range(len(A)) if i != j)


def is_symmetric(A) -> bool:
    n = len(A)
    return all(A[i][j] == A[j][i] for i in range(n) for j in range(i + 1, n))


def to_q(A):
    return [[Q(x) for x in r] for r in A]


def charpoly(A, zero=ZERO, one=ONE):
    """Coefficients of det(xI - A), leading 1 first, by Berkowitz's recursion.

    Division-free, so it works over any commutative ring whose elements
    support +, -, * (rationals, Laurent series).
    """
    n = len(A)
    p = [one]
    for k in range(n):
        a = A[k][k]
        row = A[k][:k]
        v = [A[i][k] for i in range(k)]
        col = [one, -a]
        for _ in range(k):
            col.append(-reduce(lambda s, xy: s + xy[0] * xy[1], zip(row, v), zero))
            v = [reduce(lambda s, xy: s + xy[0] * xy[1], zip(A[i][:k], v), zero) for i in range(k)]
        new = []
        for i in range(k + 2):
            acc = zero
            for j in range(max(0, i - k - 1), min(i, k) + 1):
                acc = acc + col[i - j] * p[j]
            new.append(acc)
        p = new
    return p


def rational_roots(coeffs):
    """Rational roots with multiplicity of a polynomial given leading-first.

    Returns ``(roots, degree_covered)`` where roots is a sorted list of
    ``(root, multiplicity)``.
    """
    poly = fmpq_poly([fmpq(int(c.numerator), int(c.denominator)) for c in reversed(coeffs)])
    if poly == 0:
        raise ValueError("zero polynomial")
    roots = []
    covered = 0
    for fac, m in poly.factor()[1]:
        if fac.degree() == 1:
            b, a = fac.coeffs()
            r = -b / a
            roots.append((mpq(int(r.p), int(r.q)), m))
            covered += m
    roots.sort()
    return roots, covered


def rref(A):
    """Reduced row echelon form; returns (R, pivot_columns)."""
    R = [list(r) for r in A]
    rows = len(R)
    cols = len(R[0]) if R else 0
    pivots = []
    r = 0
    for c in range(cols):
        p = next((i for i in range(r, rows) if R[i][c]), None)
        if p is None:
            continue
        R[r], R[p] = R[p], R[r]
        inv = 1 / R[r][c]
        R[r] = [x * inv for x in R[r]]
        for i in range(rows):
            if i != r and R[i][c]:
                f = R[i][c]
                R[i] = [x - f * y for x, y in zip(R[i], R[r])]
        pivots.append(c)
        r += 1
        if r == rows:
            break
    return R, pivots


def nullspace(A):
    """Basis of {x : A x = 0}, one vector per free column."""
    n = len(A[0]) if A else 0
    R, pivots = rref(A)
    free = [c for c in range(n) if c not in pivots]
    basis = []
    for f in free:
        v = [ZERO] * n
        v[f] = ONE
        for i, pc in enumerate(pivots):
            v[pc] = -R[i][f]
        basis.append(v)
    return basis


def inverse(A):
    n = len(A)
    aug = [list(r) + [ONE if i == j else ZERO for j in range(n)] for i, r in enumerate(A)]
    R, pivots = rref(aug)
    if pivots[:n] != list(range(n)):
        raise ZeroDivisionError("singular matrix")
    return [r[n:] for r in R]


def primitive(v):
    """Scale a rational vector to coprime integers with positive leading entry."""
    from math import gcd, lcm

    den = reduce(lcm, (int(x.denominator) for x in v), 1)
    ints = [int(x * den) for x in v]
    g = reduce(gcd, (abs(i) for i in ints), 0) or 1
    lead = next((i for i in ints if i), 1)
    sign = 1 if lead > 0 else -1
    return [mpq(sign * i, g) for i in ints]
