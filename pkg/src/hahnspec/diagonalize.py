"""Orthogonal diagonalization of symmetric matrices over Q((t)).

Given a symmetric A = sum_g A_g t^g whose leading matrix A_0 is diagonal
and grouped as (a_11 repeated r times | other values), the transform
U = sum_d U_d t^d is built one order at a time:

    S_d = sum_{a+b=d, 0<a,b<d} U_a^T U_b c(a,b)               (symmetric)
    T_d = -1/2 (S_d A_0 + A_0 S_d)
          + sum over a+b+e=d not involving U_d of U_a^T A_b U_e c(a,b,e)
    q_ij = T_d[i,j] / (a_jj - a_ii)   on the (r, n-r) off-diagonal blocks
    U_d = -1/2 S_d + Q_d

which keeps U^T U = I and makes every order of U^T A U block diagonal.
The two diagonal blocks are then diagonalized recursively after their
scalar part is stripped and the valuation renormalized.

All of this runs with a diagonal "metric" G (U^T G U = G instead of
U^T U = I).  With G = I and unit-normalized base eigenvectors it is the
orthonormal algorithm; with ``mode="orthogonal"`` the base eigenvectors are
left unnormalized, which needs no square roots in Q and yields pairwise
orthogonal eigenvector columns with U^T U diagonal.

Worked example, A = [[1, t], [t, 2]] at order 1:
S_1 = 0, T_1 = [[0, 1], [1, 0]], Q_1 = [[0, 1], [-1, 0]], V_1 = 0, so
U = I + Q_1 t + O(t^2).

Coefficient matrices are held as flint ``fmpq_mat`` (``None`` stands for
the zero matrix); scalars cross the API boundary as gmpy2 ``mpq``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from flint import fmpq, fmpq_mat, fmpq_poly
from gmpy2 import mpq

from .errors import (
    InvariantViolation,
    IrrationalEigenvalue,
    NotAPerfectSquare,
    NotOrthonormalizable,
    PrecisionExhausted,
    ScalarLeading,
)
from .ratmat import charpoly, eye, is_diagonal, is_symmetric, nullspace, primitive, rational_roots, transpose
from .scalars import (
    DEFAULT_PRECISION,
    INFINITE,
    ONE,
    TRIVIAL,
    ZERO,
    FactorSet,
    LaurentSeries,
    Unknown,
    as_series,
    lower_bound,
    rational_sqrt,
    valuation,
)


class SeriesMatrix:
    """Square matrix of Laurent series."""

    def __init__(self, rows, prec=None):
        rows = [[as_series(x) for x in r] for r in rows]
        if any(len(r) != len(rows) for r in rows):
            raise ValueError("matrix must be square")
        if prec is not None:
            rows = [[x.truncate(prec) for x in r] for r in rows]
        self.rows = rows

    @property
    def n(self) -> int:
        return len(self.rows)

    @property
    def prec(self):
        return min((x.prec for r in self.rows for x in r), default=INFINITE)

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[i][j]

    def transpose(self):
        return SeriesMatrix(transpose(self.rows))

    def __eq__(self, other):
        return isinstance(other, SeriesMatrix) and self.rows == other.rows

    def __repr__(self):
        body = "; ".join(", ".join(str(x) for x in r) for r in self.rows)
        return f"{type(self).__name__}[{body}]"


class SymSeriesMatrix(SeriesMatrix):
    def __init__(self, rows, prec=None):
        super().__init__(rows, prec)
        n = self.n
        for i in range(n):
            for j in range(i + 1, n):
                if self.rows[i][j] != self.rows[j][i]:
                    raise ValueError(f"matrix is not symmetric at ({i + 1}, {j + 1})")


class OrthSeriesMatrix(SeriesMatrix):
    pass


# ---------------------------------------------------------------------------
# dense matrix series: index k holds the order-k coefficient, None = 0


def _fq(x):
    return fmpq(int(x.numerator), int(x.denominator))


def _mq(y):
    return mpq(int(y.p), int(y.q))


def _fmat(rows):
    n = len(rows)
    return fmpq_mat(n, len(rows[0]) if n else 0, [_fq(x) for r in rows for x in r])


def _qrows(M, n=None):
    if M is None:
        return [[ZERO] * n for _ in range(n)]
    return [[_mq(M[i, j]) for j in range(M.ncols())] for i in range(M.nrows())]


def _nz(M):
    return None if M is None or not any(M.entries()) else M


def _cf(c: FactorSet, a, b):
    """Factor set value as fmpq, or None when it is 1."""
    if c.is_trivial:
        return None
    v = c(a, b)
    return None if v == 1 else _fq(v)


def _acc(acc, P, f=None):
    if f is not None:
        P = P * f
    return P if acc is None else acc + P


def _conv(terms):
    """sum_k f_k L_k R_k over (L, R, f) triples, skipping zero factors.

    Evaluated as a single product [L_1 .. L_m] [f_1 R_1; ..; f_m R_m], so
    the sum is accumulated over a common denominator instead of through
    one rational addition per entry and term.
    """
    terms = [(L, R, f) for L, R, f in terms if L is not None and R is not None]
    if not terms:
        return None
    if len(terms) == 1:
        L, R, f = terms[0]
        return L * R if f is None else (L * R) * f
    m, k, p = terms[0][0].nrows(), terms[0][0].ncols(), terms[0][1].ncols()
    left = [L.entries() for L, _, _ in terms]
    H = fmpq_mat(m, k * len(terms), [x for i in range(m) for e in left for x in e[i * k:(i + 1) * k]])
    right = []
    for _, R, f in terms:
        right.extend(R.entries() if f is None else [y * f for y in R.entries()])
    return H * fmpq_mat(k * len(terms), p, right)


def _diag_mul(d, M):
    n, m = M.nrows(), M.ncols()
    return fmpq_mat(n, m, [d[i] * M[i, j] for i in range(n) for j in range(m)])


def _to_dense(rows, start, length, c: FactorSet):
    """Coefficient matrices of t^(-start) * M for orders 0..length-1."""
    n = len(rows)
    grid = [None] * length
    for i in range(n):
        for j in range(n):
            for e, q in rows[i][j].terms():
                k = e - start
                if 0 <= k < length:
                    if grid[k] is None:
                        grid[k] = [[ZERO] * n for _ in range(n)]
                    grid[k][i][j] = q / c(start, k)
    return [None if g is None else _nz(_fmat(g)) for g in grid]


def _from_dense(dense, start, prec, n):
    grids = [(start + k, _qrows(M)) for k, M in enumerate(dense) if M is not None and start + k < prec]
    return [[LaurentSeries({e: g[i][j] for e, g in grids}, prec) for j in range(n)] for i in range(n)]


def series_matmul(X, Y, length, c: FactorSet = TRIVIAL, sx=0, sy=0):
    """Twisted product of dense matrix series truncated to ``length`` orders.

    X and Y hold orders sx+k and sy+k at index k; the result is indexed from
    sx+sy.
    """
    out = [None] * length
    for k in range(length):
        out[k] = _nz(_conv((X[a], Y[k - a], _cf(c, sx + a, sy + k - a))
                           for a in range(max(0, k - len(Y) + 1), min(k + 1, len(X)))))
    return out


# ---------------------------------------------------------------------------
# base field step


@dataclass
class BaseSplit:
    """O with O^T G O = G' diagonal and O^T A0 O = G' diag(eigenvalues)."""

    O: list
    eigenvalues: list
    metric: list


class RationalOracle:
    """Diagonalize a rational symmetric matrix against a diagonal metric.

    Eigenvalues come from the rational roots of the characteristic
    polynomial, eigenvectors from exact kernels, orthogonality from
    Gram-Schmidt inside each eigenspace.  With ``normalize`` the columns
    are scaled to unit length, which needs rational square roots.
    """

    def __init__(self, normalize=True):
        self.normalize = normalize

    def __call__(self, A0, metric=None, path=()) -> BaseSplit:
        n = len(A0)
        metric = [ONE] * n if metric is None else list(metric)
        if not is_symmetric(A0):
            raise ValueError("base matrix is not symmetric")
        if is_diagonal(A0):
            return BaseSplit(eye(n), [A0[i][i] / metric[i] for i in range(n)], metric)
        scaled = [[A0[i][j] / metric[i] for j in range(n)] for i in range(n)]
        roots, covered = rational_roots(charpoly(scaled))
        if covered != n:
            raise IrrationalEigenvalue(
                f"block {_fmt_path(path)}: characteristic polynomial has irrational roots", path
            )
        columns, eig = [], []
        for mu, mult in roots:
            shifted = [[A0[i][j] - (mu * metric[i] if i == j else ZERO) for j in range(n)] for i in range(n)]
            kernel = nullspace(shifted)
            if len(kernel) != mult:
                raise IrrationalEigenvalue(f"block {_fmt_path(path)}: defective eigenvalue {mu}", path)
            for v in _gram_schmidt_metric(kernel, metric):
                columns.append(v)
                eig.append(mu)
        O, new_metric = self._finish(columns, metric, path)
        return BaseSplit(O, eig, new_metric)

    def _finish(self, columns, metric, path):
        new_metric = []
        out = []
        for v in columns:
            if self.normalize:
                nn = sum(x * x * g for x, g in zip(v, metric))
                try:
                    s = rational_sqrt(nn)
                except NotAPerfectSquare as exc:
                    raise NotOrthonormalizable(
                        f"block {_fmt_path(path)}: eigenvector has squared length {nn}", path
                    ) from exc
                v = [x / s for x in v]
                new_metric.append(ONE)
            else:
                v = primitive(v)
                new_metric.append(sum(x * x * g for x, g in zip(v, metric)))
            out.append(v)
        return transpose(out), new_metric


def _gram_schmidt_metric(vectors, metric):
    basis, norms = [], []
    for v in vectors:
        x = list(v)
        for b, nb in zip(basis, norms):
            coef = sum(p * q * g for p, q, g in zip(v, b, metric)) / nb
            if coef:
                x = [xi - coef * bi for xi, bi in zip(x, b)]
        basis.append(x)
        norms.append(sum(xi * xi * g for xi, g in zip(x, metric)))
    return basis


def _fmt_path(path):
    return "/".join(path) if path else "root"


def base_diagonalize(A0, oracle=None):
    """Rational orthogonal O and diagonal D with O^T A0 O = D."""
    A0 = [[mpq(x) for x in r] for r in A0]
    split = (oracle or RationalOracle(normalize=True))(A0)
    n = len(A0)
    D = [[split.eigenvalues[i] * split.metric[i] if i == j else ZERO for j in range(n)] for i in range(n)]
    return split.O, D


def orthogonalize_eigenbasis(groups, normalize=True):
    """Columns of an orthogonal matrix from eigenvectors grouped by eigenvalue."""
    columns = []
    for g in groups:
        columns.extend(_gram_schmidt_metric([[mpq(x) for x in v] for v in g], [ONE] * len(g[0])))
    O, _ = RationalOracle(normalize)._finish(columns, [ONE] * len(columns[0]), ())
    return O


def group_permutation(values):
    """Stable grouping by first occurrence; returns (perm, r)."""
    order = list(dict.fromkeys(values))
    perm = [i for v in order for i, w in enumerate(values) if w == v]
    r = sum(1 for w in values if w == order[0]) if order else 0
    return perm, r


# ---------------------------------------------------------------------------
# the order loop


@dataclass
class StepResult:
    S: list
    T: list
    Q: list
    U: list
    V: list


@dataclass
class OrderState:
    """Everything the order-d step needs: the conjugated input C (dense,
    leading term diag(metric * a)), the metric, the leading eigenvalues a,
    the block labels and the U_g already determined.

    ``groups[i]`` labels the diagonal block of index i; Q_d is filled on
    every (i, j) with different labels.  The classical split is
    [0]*r + [1]*(n-r).
    """

    C: list
    metric: list
    a: list
    r: int
    c: FactorSet
    groups: list = field(default_factory=list)
    X: list = field(default_factory=list)
    XT: list = field(default_factory=list)
    GX: list = field(default_factory=list)
    CX: list = field(default_factory=list)

    @classmethod
    def start(cls, C, metric, a, r, c=TRIVIAL, groups=None):
        """C may hold rational row lists or fmpq_mat; metric and a are rationals."""
        n = len(metric)
        C = [M if M is None or isinstance(M, fmpq_mat) else _nz(_fmat(M)) for M in C]
        groups = list(groups) if groups is not None else [0] * r + [1] * (n - r)
        st = cls(C=C, metric=[_fq(mpq(g)) for g in metric], a=[_fq(mpq(x)) for x in a], r=r, c=c,
                 groups=groups)
        I = _fmat(eye(n))
        st.X = [I]
        st.XT = [I]
        st.GX = [_diag_mul(st.metric, I)]
        st.CX = [C[0] if C and C[0] is not None else None]
        return st

    def C_at(self, k):
        return self.C[k] if k < len(self.C) else None


def _step(st: OrderState, d: int):
    """One order of the loop on dense state; returns (S, T, Q, U, V), None = 0."""
    if d != len(st.X):
        raise ValueError(f"orders must be stepped in sequence (next is {len(st.X)})")
    n = len(st.metric)
    a, gid, c, G = st.a, st.groups, st.c, st.metric

    S = _conv((st.XT[al], st.GX[d - al], _cf(c, al, d - al)) for al in range(1, d))
    partial = _conv((st.C_at(be), st.X[d - be], _cf(c, be, d - be)) for be in range(1, d + 1))
    rest = _conv((st.XT[al], st.CX[d - al], _cf(c, al, d - al)) for al in range(1, d))
    if partial is not None:
        rest = partial if rest is None else rest + partial

    if S is None and rest is None:
        for lst in (st.X, st.XT, st.GX, st.CX):
            lst.append(None)
        return None, None, None, None, None
    S = fmpq_mat(n, n) if S is None else S
    rest = fmpq_mat(n, n) if rest is None else rest
    if S != S.transpose() or rest != rest.transpose():
        raise InvariantViolation(
            f"order {d}: S or T not symmetric; the factor set likely violates its axioms"
        )
    half = fmpq(1, 2)
    Tm = rest - fmpq_mat(n, n, [half * S[i, j] * (a[i] + a[j]) for i in range(n) for j in range(n)])
    Qm = fmpq_mat(n, n)
    Vm = fmpq_mat(n, n)
    Um = fmpq_mat(n, n)
    for i in range(n):
        for j in range(n):
            t = Tm[i, j]
            if gid[i] != gid[j]:
                if t != 0:
                    Qm[i, j] = t / (a[j] - a[i])
            else:
                Vm[i, j] = t
            Um[i, j] = (Qm[i, j] - half * S[i, j]) / G[i]
    U = _nz(Um)
    st.X.append(U)
    st.XT.append(None if U is None else U.transpose())
    st.GX.append(None if U is None else _diag_mul(G, U))
    cx = partial
    C0 = st.C_at(0)
    if U is not None and C0 is not None:
        cx = _acc(cx, C0 * U)
    st.CX.append(_nz(cx))
    return S, Tm, Qm, U, _nz(Vm)


def step_order(st: OrderState, d: int) -> StepResult:
    """Determine U_d from U_0..U_{d-1} and append it to the state.

    Returns S_d, T_d, Q_d, U_d and the block-diagonal V_d as rational rows.
    """
    n = len(st.metric)
    return StepResult(*(_qrows(M, n) for M in _step(st, d)))


# ---------------------------------------------------------------------------
# recursion


@dataclass
class _Solved:
    X: list  # dense orders 0..length-1
    eig: list  # per index: eigenvalue coefficients relative to the metric
    metric: list
    exact: bool
    levels: list  # diagnostics: (path, size, gamma, r)


def _scalar_in_metric(M, G):
    """s with M = s * diag(G), or None."""
    if M is None:
        return ZERO
    n = len(G)
    s = M[0, 0] / _fq(G[0])
    for i in range(n):
        for j in range(n):
            if i == j:
                if M[i, i] != s * _fq(G[i]):
                    return None
            elif M[i, j] != 0:
                return None
    return _mq(s)


def _first_nonscalar(B, G, known):
    s = []
    for k in range(known):
        sk = _scalar_in_metric(B[k] if k < len(B) else None, G)
        if sk is None:
            return k, s
        s.append(sk)
    return None, s


def _block(M, lo, hi):
    if M is None:
        return None
    k = hi - lo
    return _nz(fmpq_mat(k, k, [M[i, j] for i in range(lo, hi) for j in range(lo, hi)]))


def _runs(values):
    """Contiguous runs of equal values as (lo, hi) pairs."""
    out = []
    lo = 0
    for i in range(1, len(values) + 1):
        if i == len(values) or values[i] != values[lo]:
            out.append((lo, i))
            lo = i
    return out


def _solve(B, G, known, length, c, oracle, path, split_all=False) -> _Solved:
    n = len(G)
    if n == 1:
        eig = [(_mq(B[k][0, 0]) / G[0] if k < len(B) and B[k] is not None else ZERO) for k in range(known)]
        return _Solved([_fmat([[ONE]])] + [None] * (length - 1), [eig], list(G), True, [])
    gamma, s = _first_nonscalar(B, G, known)
    if gamma is None:
        return _Solved([_fmat(eye(n))] + [None] * (length - 1), [list(s) for _ in range(n)], list(G), True,
                       [(_fmt_path(path), n, None, n)])
    # B = s * G + t^gamma * B'' with B''_k = B_{gamma+k} / c(gamma, k)
    known2 = known - gamma
    Bs = [None] * known2
    for k in range(known2):
        M = B[gamma + k] if gamma + k < len(B) else None
        if M is not None:
            f = _cf(c, gamma, k)
            Bs[k] = M if f is None else M * (1 / f)
    base = oracle(_qrows(Bs[0]), G, path)
    perm, r = group_permutation(base.eigenvalues)
    R = _fmat([[base.O[i][p] for p in perm] for i in range(n)])
    a = [base.eigenvalues[p] for p in perm]
    G2 = [base.metric[p] for p in perm]
    if split_all:
        ranges = _runs(a)
        tags = [f"G{k + 1}" for k in range(len(ranges))]
    else:
        ranges = [(0, r), (r, n)]
        tags = ["A1", "A2"]
    groups = [k for k, (lo, hi) in enumerate(ranges) for _ in range(lo, hi)]
    RT = R.transpose()
    C = [None if M is None else _nz(RT * M * R) for M in Bs]
    st = OrderState.start(C, G2, a, r, c, groups)
    V = [C[0]]
    for d in range(1, length):
        Vd = _step(st, d)[4]
        if d < known2:
            V.append(Vd)
    blocks = [_solve([_block(M, lo, hi) for M in V], G2[lo:hi], known2, length, c, oracle,
                     path + (tag,), split_all)
              for (lo, hi), tag in zip(ranges, tags)]
    W = [None] * length
    for k in range(length):
        parts = [b.X[k] for b in blocks]
        if all(p is None for p in parts):
            continue
        M = fmpq_mat(n, n)
        for (lo, hi), p in zip(ranges, parts):
            if p is not None:
                for i in range(hi - lo):
                    for j in range(hi - lo):
                        M[lo + i, lo + j] = p[i, j]
        W[k] = M
    loop_trivial = all(U is None for U in st.X[1:])
    if all(M is None for M in W[1:]) and W[0] == _fmat(eye(n)):
        X = st.X
    elif loop_trivial:
        X = W
    else:
        X = series_matmul(st.X, W, length, c)
    X = [None if M is None else R * M for M in X]
    exact = loop_trivial and all(b.exact for b in blocks)
    eig = []
    for b in blocks:
        for e in b.eig:
            eig.append(list(s) + [c(gamma, k) * e[k] for k in range(known2)])
    levels = [(_fmt_path(path), n, gamma, r)] + [lv for b in blocks for lv in b.levels]
    return _Solved(X, eig, [m for b in blocks for m in b.metric], exact, levels)


@dataclass
class DiagResult:
    U: OrthSeriesMatrix
    D: SymSeriesMatrix
    precision: int
    eigenvalues: list
    gram: list
    factor_set: FactorSet = TRIVIAL
    mode: str = "orthonormal"
    certificate: dict = field(default_factory=dict)


@dataclass
class LeadingForm:
    shift: int
    matrix: SymSeriesMatrix
    r: int
    transform: list
    eigenvalues: list


def _dense_input(A: SeriesMatrix, N, c):
    vals = [valuation(x) for r_ in A.rows for x in r_]
    known_vals = [v for v in vals if not isinstance(v, Unknown) and v != INFINITE]
    if not known_vals:
        return None
    g0 = min(known_vals)
    if any(isinstance(v, Unknown) and v.bound < g0 for v in vals):
        raise PrecisionExhausted("an entry vanishes to precision below the leading order")
    known = N - g0
    if known <= 0:
        raise PrecisionExhausted(f"leading order {g0} is beyond the precision {N}")
    return g0, known, _to_dense(A.rows, g0, known, c)


def normalize_leading(A: SeriesMatrix, c: FactorSet = TRIVIAL, oracle=None) -> LeadingForm:
    """Factor out t^g0, diagonalize A_0 and group its first eigenvalue first."""
    N = A.prec if A.prec != INFINITE else DEFAULT_PRECISION
    dense = _dense_input(A, N, c)
    if dense is None:
        raise PrecisionExhausted("matrix vanishes to precision")
    g0, known, B = dense
    n = A.n
    G = [ONE] * n
    if _scalar_in_metric(B[0], G) is not None:
        raise ScalarLeading("leading matrix is a multiple of I")
    split = (oracle or RationalOracle())(_qrows(B[0]), G, ())
    perm, r = group_permutation(split.eigenvalues)
    R = [[split.O[i][p] for p in perm] for i in range(n)]
    Rf = _fmat(R)
    C = [None if M is None else _nz(Rf.transpose() * M * Rf) for M in B]
    return LeadingForm(g0, SymSeriesMatrix(_from_dense(C, 0, known, n)), r, R,
                       [split.eigenvalues[p] for p in perm])


def diagonalize(A, N=None, c: FactorSet = TRIVIAL, oracle=None, mode="orthonormal",
                split="all") -> DiagResult:
    """U and diagonal D with U^T A U = D and U^T U = I modulo t^N.

    ``mode="orthogonal"`` relaxes U^T U = I to U^T U = diag(gram).
    ``split="pair"`` splits each level into the block of the first
    eigenvalue and the rest; ``split="all"`` separates every distinct
    leading eigenvalue at once, which needs fewer levels.
    """
    if not isinstance(A, SeriesMatrix):
        A = SymSeriesMatrix(A)
    if mode not in ("orthonormal", "orthogonal"):
        raise ValueError(f"unknown mode {mode!r}")
    if split not in ("pair", "all"):
        raise ValueError(f"unknown split {split!r}")
    if N is None:
        N = A.prec if A.prec != INFINITE else DEFAULT_PRECISION
    # an exact U is only claimed when truncation at t^N loses nothing
    complete = all(x.is_exact and all(e < N for e, _ in x.terms()) for r_ in A.rows for x in r_)
    A = SymSeriesMatrix(A.rows, N)
    oracle = oracle or RationalOracle(normalize=(mode == "orthonormal"))
    n = A.n
    dense = _dense_input(A, N, c)
    if dense is None:
        # zero to precision: already diagonal
        I = OrthSeriesMatrix([[LaurentSeries.const(1 if i == j else 0) for j in range(n)] for i in range(n)])
        return DiagResult(I, A, N, [A[i, i] for i in range(n)], [ONE] * n, c, mode,
                          {"shift": None, "levels": [], "exact_U": True})
    g0, known, B = dense
    length = max(N, known)
    sol = _solve(B, [ONE] * n, known, length, c, oracle, (), split == "all")
    uprec = INFINITE if sol.exact and (complete or n == 1) else length
    U = _from_dense(sol.X, 0, uprec, n)
    eig = [LaurentSeries({g0 + k: c(g0, k) * e[k] for k in range(known)}, N) for e in sol.eig]
    D = [[(eig[i] * sol.metric[i] if i == j else LaurentSeries.zero()) for j in range(n)] for i in range(n)]
    cert = {"shift": g0, "levels": sol.levels, "exact_U": uprec == INFINITE, "orders": length, "split": split}
    return DiagResult(OrthSeriesMatrix(U), SymSeriesMatrix(D), N, eig, sol.metric, c, mode, cert)


# ---------------------------------------------------------------------------
# verification


@dataclass
class VerifyReport:
    ok: bool
    precision: int
    orthogonality: object  # min valuation of U^T U - gram
    residual: object  # min valuation of U^T A U - D
    offdiag: object
    failures: list = field(default_factory=list)

    def __str__(self):
        status = "pass" if self.ok else "FAIL"
        return (f"{status}: orth>={self.orthogonality} resid>={self.residual} "
                f"offdiag>={self.offdiag} (need {self.precision})")


def _plain_dense(M: SeriesMatrix):
    vals = [lower_bound(valuation(x)) for r_ in M.rows for x in r_]
    start = min([v for v in vals if v != INFINITE], default=0)
    if M.prec != INFINITE:
        length = max(M.prec - start, 0)
    else:
        length = max((e - start + 1 for r_ in M.rows for x in r_ for e, _ in x.terms()), default=0)
    return start, length, _to_dense(M.rows, start, length, TRIVIAL)


def twisted_product(X: SeriesMatrix, Y: SeriesMatrix, c: FactorSet = TRIVIAL, prec=None) -> SeriesMatrix:
    """X * Y with twisted coefficient products, known below min(vX + pY, vY + pX)."""
    sx, lx, Dx = _plain_dense(X)
    sy, ly, Dy = _plain_dense(Y)
    p = min(sx + Y.prec, sy + X.prec)
    if prec is not None:
        p = min(p, prec)
    length = (lx + ly) if p == INFINITE else max(p - sx - sy, 0)
    out = series_matmul(Dx, Dy, length, c, sx, sy)
    return SeriesMatrix(_from_dense(out, sx + sy, p, X.n))


def _to_poly(x: LaurentSeries, start, length):
    coeffs = [fmpq(0)] * max(length, 0)
    for e, q in x.terms():
        if 0 <= e - start < length:
            coeffs[e - start] = _fq(q)
    return fmpq_poly(coeffs)


def _poly_matmul(P, Q, length):
    n = len(P)
    return [[sum((P[i][k].mul_low(Q[k][j], length) for k in range(n)), fmpq_poly()) for j in range(n)]
            for i in range(n)]


def _min_val(M: SeriesMatrix):
    vals = [lower_bound(valuation(x)) for r_ in M.rows for x in r_]
    return min([v for v in vals if v != INFINITE], default=0)


def _poly_residual(P, start, ref, prec, skip_diag=False):
    """Smallest valuation of (t^start * P) - ref, where entries vanishing below
    ``prec`` count as ``prec``."""
    n = len(P)
    best = INFINITE
    for i in range(n):
        for j in range(n):
            if skip_diag and i == j:
                continue
            r = ref[i][j] if ref is not None else None
            p = prec if r is None else min(prec, r.prec)
            if r is not None:
                low = [e for e, _ in r.terms() if e < start]
                if low:
                    best = min(best, low[0], p)
                    continue
            diff = P[i][j] if r is None else P[i][j] - _to_poly(r, start, p - start)
            k = next((k for k, q in enumerate(diff.coeffs()) if q != 0 and k < p - start), None)
            best = min(best, p if k is None else start + k)
    return best


def _verify_untwisted(U: SeriesMatrix, A: SeriesMatrix, D, gram, N):
    """verify() for the trivial factor set on flint polynomial matrices."""
    n = U.n
    sU, sA = _min_val(U), _min_val(A)
    pU, pA = U.prec, A.prec
    p1 = min(sU + pU, N)
    pUA = min(sU + pA, sA + pU, N)
    p2 = min(sU + sA + pU, sU + pUA, N)
    L = max(p1, p2, pUA) - min(2 * sU, sU + sA, sA, sU)
    Pu = [[_to_poly(x, sU, L) for x in r_] for r_ in U.rows]
    PuT = [list(col) for col in zip(*Pu)]
    Pa = [[_to_poly(x, sA, L) for x in r_] for r_ in A.rows]
    UTU = _poly_matmul(PuT, Pu, max(p1 - 2 * sU, 0))
    UTA = _poly_matmul(PuT, Pa, max(pUA - sU - sA, 0))
    UTAU = _poly_matmul(UTA, Pu, max(p2 - 2 * sU - sA, 0))
    G = [[LaurentSeries.const(gram[i] if i == j else 0) for j in range(n)] for i in range(n)]
    orth = _poly_residual(UTU, 2 * sU, G, p1)
    resid = _poly_residual(UTAU, 2 * sU + sA, D.rows, p2)
    off = _poly_residual(UTAU, 2 * sU + sA, None, p2, skip_diag=True)
    return orth, resid, off


def verify(result: DiagResult, A, N=None) -> VerifyReport:
    """Check U^T U - gram, U^T A U - D (and hence its off-diagonal) to t^N."""
    if not isinstance(A, SeriesMatrix):
        A = SymSeriesMatrix(A)
    N = result.precision if N is None else N
    c = result.factor_set
    U = result.U
    n = U.n
    A = SeriesMatrix(A.rows, N)
    if c.is_trivial:
        orth, resid, off = _verify_untwisted(U, A, result.D, result.gram, N)
    else:
        UT = U.transpose()
        gram = SeriesMatrix([[LaurentSeries.const(result.gram[i] if i == j else 0) for j in range(n)]
                             for i in range(n)])
        orth = _residual_valuation(twisted_product(UT, U, c, N), gram, N)
        UTAU = twisted_product(twisted_product(UT, A, c, N), U, c, N)
        resid = _residual_valuation(UTAU, result.D, N)
        off = _residual_valuation(UTAU, None, N, offdiag_only=True)
    failures = []
    for name, v in (("U^T U", orth), ("U^T A U - D", resid), ("offdiag(U^T A U)", off)):
        if v < N:
            failures.append(f"{name}: residual valuation {v} < {N}")
    return VerifyReport(not failures, N, orth, resid, off, failures)


def _residual_valuation(M: SeriesMatrix, ref, N, offdiag_only=False):
    """Smallest valuation of M - ref; a zero-to-precision entry counts as its bound."""
    n = M.n
    best = INFINITE
    for i in range(n):
        for j in range(n):
            if offdiag_only and i == j:
                continue
            x = M[i, j]
            if ref is not None:
                x = x - ref[i, j]
            best = min(best, lower_bound(valuation(x.truncate(N))))
    return best
