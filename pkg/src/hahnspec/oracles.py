"""Eigenvalues of a series matrix by Newton iteration on its characteristic
polynomial, independent of the diagonalization code."""

from __future__ import annotations

from .ratmat import charpoly, rational_roots
from .scalars import DEFAULT_PRECISION, LaurentSeries, lower_bound, residue, series_div, valuation


def _horner(coeffs, x):
    acc = coeffs[0]
    for c in coeffs[1:]:
        acc = acc * x + c
    return acc


def _derivative(coeffs):
    n = len(coeffs) - 1
    return [c.scale(n - k) for k, c in enumerate(coeffs[:-1])]


def newton_eigenvalues(A, N=DEFAULT_PRECISION):
    """Roots of det(xI - A) in Q[[t]], one per rational residue root.

    Requires entries of valuation >= 0 and simple residue roots.  The
    iteration doubles the number of correct orders per step.
    """
    n = len(A.rows) if hasattr(A, "rows") else len(A)
    rows = A.rows if hasattr(A, "rows") else A
    rows = [[x.truncate(N) for x in r] for r in rows]
    zero = LaurentSeries.zero()
    one = LaurentSeries.const(1)
    p = charpoly(rows, zero, one)
    res = [residue(c) for c in p]
    roots, covered = rational_roots(res)
    if covered != n or any(m != 1 for _, m in roots):
        raise ValueError("Newton oracle needs simple rational residue roots")
    dp = _derivative(p)
    out = []
    for mu, _ in roots:
        lam = LaurentSeries.const(mu)
        correct = 1
        while correct < N:
            correct = min(2 * correct, N)
            f = _horner(p, lam).truncate(correct)
            if f.is_zero():
                continue
            d = _horner(dp, lam).truncate(correct)
            # keep the iterate exact so the next residual is not capped
            lam = LaurentSeries((lam - series_div(f, d)).truncate(correct).coeffs)
        out.append(LaurentSeries(lam.coeffs, N))
    return out


def match_up_to_permutation(xs, ys, N):
    """True when the series lists agree below t^N after some permutation."""
    remaining = [y.truncate(N) for y in ys]
    for x in xs:
        x = x.truncate(N)
        for k, y in enumerate(remaining):
            if lower_bound(valuation(x - y)) >= N:
                del remaining[k]
                break
        else:
            return False
    return not remaining
