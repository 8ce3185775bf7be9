import random

import pytest
from gmpy2 import mpq

from hahnspec.errors import NotInvariant
from hahnspec.generators import gen_self_adjoint_operator
from hahnspec.linalg import OrthoBasis, VectorC0, e, inner
from hahnspec.operators import OperatorC0, apply
from hahnspec.scalars import INFINITE, LaurentSeries
from hahnspec.spectral import (
    eigen_decompose,
    normalized_decomposition,
    random_probes,
    reconstruct,
    spectral_decompose,
    spectrum_report,
    tail_projection_norms,
    verify_commuting_projection,
    verify_eigenspace_orthogonality,
    verify_eigs_tend_to_zero,
    verify_norm_max,
    verify_normalized,
    verify_reconstruction,
)
from hahnspec.suite import corrupt_cross, corrupt_eigenvalue, corrupt_norm_level

t = LaurentSeries.monomial(1, 1)
T2 = OperatorC0([[t, t**2], [t**2, t]])
N = 16


def pairs(dec):
    return [p for g in dec.groups for p in g]


def test_two_by_two_closed_form():
    dec = spectral_decompose(T2, N)
    got = {str(p.lam.truncate(N)): p.vectors[0] for p in pairs(dec)}
    assert set(got) == {"t - t^2 (prec 16)", "t + t^2 (prec 16)"}
    assert got["t + t^2 (prec 16)"].agrees(VectorC0.from_list([1, 1]))
    assert got["t - t^2 (prec 16)"].agrees(VectorC0.from_list([1, -1]))
    assert dec.levels == [1]


def test_diagonal_and_zero():
    D = OperatorC0([], [(1, t), (2, t**3)])
    dec = spectral_decompose(D, N)
    assert [(p.lam, p.vectors) for p in pairs(dec)] == [(t, [e(1)]), (t**3, [e(2)])]
    assert eigen_decompose(OperatorC0.zero(), N) == []
    assert spectral_decompose(OperatorC0.zero(), N).levels == []


def test_levels_with_multiplicity():
    dec = spectral_decompose(OperatorC0.diagonal([t, t**2, t]), N)
    assert dec.levels == [1, 2]
    assert sum(len(p.vectors) for p in dec.groups[0]) == 2
    assert sum(len(p.vectors) for p in dec.groups[1]) == 1


def test_reconstruction_on_unit_vector():
    dec = spectral_decompose(T2, N)
    assert reconstruct(dec, e(1)).agrees(apply(T2, e(1)))


def test_spectrum_report():
    rep = spectrum_report(T2, 8)
    assert [m for _, m in rep.eigenvalues] == [1, 1]
    assert rep.valuations() == [1, 1]


def test_norm_max_examples():
    for T in (OperatorC0.diagonal([t, t**2]), T2, OperatorC0.zero()):
        assert verify_norm_max(T, spectral_decompose(T, N))


def test_orthogonality_examples():
    assert verify_eigenspace_orthogonality(spectral_decompose(T2, N))
    assert verify_eigenspace_orthogonality(spectral_decompose(OperatorC0.diagonal([t, t**2, t**3]), N))


def test_commuting_projection_examples():
    D = OperatorC0.diagonal([t, t**2])
    assert verify_commuting_projection(D, OrthoBasis([e(1)]), N)
    assert verify_commuting_projection(T2, OrthoBasis([VectorC0.from_list([1, 1])]), N)
    with pytest.raises(NotInvariant):
        verify_commuting_projection(T2, OrthoBasis([e(1)]), N)


def test_tail_projection_norms():
    D = OperatorC0([], [(1, t), (2, t**2), (3, t**3)])
    vals, verdict = tail_projection_norms(D, spectral_decompose(D, N))
    assert vals == [2, 3, INFINITE]
    assert verdict


def test_eigenvalues_tend_to_zero():
    T = OperatorC0([[t]], [(1 + k, t**k) for k in range(2, 8)])
    dec = spectral_decompose(T, N)
    assert dec.levels == list(range(1, 8))
    assert verify_eigs_tend_to_zero(dec)
    assert verify_eigs_tend_to_zero(spectral_decompose(T2, N))


def test_normalized_examples():
    s = mpq(1, 25)
    A = OperatorC0([[t * 41 * s, t * -12 * s], [t * -12 * s, t * 34 * s]])
    nd = normalized_decomposition(spectral_decompose(A, N))
    assert not nd.failures
    vecs = [x for _, x in nd.flat]
    assert vecs[0].agrees(VectorC0.from_list([mpq(3, 5), mpq(4, 5)]))
    assert verify_normalized(A, nd)
    nd = normalized_decomposition(spectral_decompose(OperatorC0([[t]], [(2, t**2)]), N))
    assert [x for _, x in nd.flat] == [e(1), e(2)] and not nd.failures
    nd = normalized_decomposition(spectral_decompose(T2, N))
    assert len(nd.failures) == 2


def test_non_self_adjoint_rejected():
    with pytest.raises(ValueError):
        eigen_decompose(OperatorC0([[0, 1], [0, 0]]), N)


def test_generated_operators():
    for seed in range(15):
        T = gen_self_adjoint_operator(seed, 20)
        dec = spectral_decompose(T, 20)
        assert verify_reconstruction(T, dec, random_probes(T.size, 10, seed))
        assert verify_norm_max(T, dec)
        assert verify_eigenspace_orthogonality(dec)
        assert verify_eigs_tend_to_zero(dec)
        assert tail_projection_norms(T, dec)[1]
        for p in pairs(dec):
            assert verify_commuting_projection(T, OrthoBasis(p.vectors), 20)
        for (lam, x), nn in zip(dec.flat, dec.self_inner):
            assert inner(x, x).agrees(nn)


def test_negative_controls():
    rng = random.Random(2)
    for seed in range(15):
        T = gen_self_adjoint_operator(100 + seed, 20)
        dec = spectral_decompose(T, 20)
        probes = random_probes(T.size, 10, seed)
        bad = corrupt_eigenvalue(dec, rng)
        if bad is not None:
            assert not verify_reconstruction(T, bad, probes)
        if dec.levels:
            assert not verify_norm_max(T, corrupt_norm_level(dec, rng))
        cross = corrupt_cross(dec, rng)
        if cross is not None:
            assert not verify_eigenspace_orthogonality(cross[0])
