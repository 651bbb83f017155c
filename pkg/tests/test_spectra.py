import math

import numpy as np
import pytest

from magharper.algebra import AlgebraElement, build_named_operator, lift_to_extension
from magharper.cocycle import MagneticZ2, Trivial
from magharper.errors import DomainError, ResourceCapError
from magharper.groups import Lattice, LamplighterModel, LatticeModel, folner_set
from magharper.oracle import kernel_rank_exact
from magharper.spectra import (SpectralDensity, butterfly_sweep, certify_normalization, detect_gaps,
                               exact_moment, ids_rows, lamplighter_blocks, level_flags, moment_error_bound,
                               operator_matrix, push_forward, quotient_multiplicity, reduced_fractions,
                               spectral_density, spectral_inclusion, truncate, truncated_moment)

Z2 = LatticeModel(2)


def _density(eigs, weight, d=1):
    return SpectralDensity(np.sort(np.asarray(eigs, dtype=float)), weight, d, 1e-8)


def test_truncation_dimensions():
    T = truncate(build_named_operator("harper", Z2), folner_set(Z2, 2))
    assert T.dim == 25 and T.hermitian_defect() == 0
    ext, At = lift_to_extension(build_named_operator("harper", Z2, MagneticZ2.flux(1, 2)))
    Te = truncate(At, folner_set(ext, 2))
    assert Te.dim == 50 and Te.r == 2 and Te.base_size == 25 and Te.hermitian_defect() == 0


def test_truncation_matrix_entries():
    sigma = MagneticZ2(0.3, 1.1)
    A = build_named_operator("harper", Z2, sigma)
    T = truncate(A, folner_set(Z2, 1))
    index = {x: i for i, (_, x) in enumerate(T.basis)}
    x, g = Lattice((0, 0)), Lattice((1, 0))
    assert T.matrix[index[g], index[x]] == pytest.approx(sigma(g, x))


def test_truncation_cap():
    with pytest.raises(ResourceCapError):
        truncate(build_named_operator("harper", Z2), folner_set(Z2, 10), cap_dim=100)


def test_eigenvalues_within_norm_bound():
    A = build_named_operator("harper", Z2, MagneticZ2(0.2, 1.7))
    dn = spectral_density(truncate(A, folner_set(Z2, 6)))
    assert np.all(np.abs(dn.eigenvalues) <= A.norm1 + 1e-12)


def test_counting_example():
    dn = _density([0, 1, 1, 2], 0.25)
    assert dn.F(1) == 0.75 and dn.D(1) == 0.5
    assert dn.F(-0.1) == 0 and dn.F(2) == 1 and dn.F(100) == 1
    grid = np.linspace(-1, 3, 41)
    assert np.all(np.diff(dn.F(grid)) >= 0)


def test_second_moment_bound():
    A = build_named_operator("harper", Z2)
    T = truncate(A, folner_set(Z2, 10))
    dn = spectral_density(T)
    ratio = folner_set(Z2, 10).ratio
    assert abs(dn.moment(2) - 4) <= 4 * ratio
    assert dn.total_mass == pytest.approx(1, abs=1e-12)


def test_extension_density_mass_and_certificate():
    ext, At = lift_to_extension(build_named_operator("harper", Z2, MagneticZ2.flux(1, 3), d=1))
    dn = spectral_density(truncate(At, folner_set(ext, 4)))
    assert abs(dn.total_mass - 1) <= 1e-12
    gaps = [0.5 * (a + b) for a, b in zip(dn.eigenvalues[:-1], dn.eigenvalues[1:]) if b - a > 1e-3]
    for lam in gaps[:5]:
        assert certify_normalization(dn, lam) <= 1e-10
    with pytest.raises(DomainError):
        certify_normalization(dn, float(dn.eigenvalues[0]))


def test_exact_moments():
    A = build_named_operator("harper", Z2)
    assert exact_moment(A, 1) == 0 and exact_moment(A, 2) == 4 and exact_moment(A, 4) == 36
    for theta in (0.3, 1.0, math.pi / 2):
        B = build_named_operator("harper", Z2, MagneticZ2(0.0, theta))
        assert abs(exact_moment(B, 4) - (28 + 8 * math.cos(theta))) <= 1e-12
    with pytest.raises(DomainError):
        exact_moment(A, 13)


def test_truncated_moments_converge():
    A = build_named_operator("harper", Z2)
    errs = []
    for m in (5, 10, 20):
        T = truncate(A, folner_set(Z2, m))
        err = abs(truncated_moment(T, 4) - 36)
        assert err <= moment_error_bound(A, m, 4)
        errs.append(err)
    assert errs[0] > errs[1] > errs[2]


def test_detect_gaps_examples():
    A = build_named_operator("harper", Z2)
    dens = [spectral_density(truncate(A, folner_set(Z2, m))) for m in (10, 20)]
    n = A.norm1
    flagged = detect_gaps(dens, [n + 0.5, n + 1])
    assert len(flagged) == 1 and flagged[0].masses == (0.0, 0.0)
    assert detect_gaps(dens, [-1, 1]) == []
    with pytest.raises(DomainError):
        detect_gaps(dens[:1], [0, 1])
    with pytest.raises(DomainError):
        detect_gaps(dens, [1, 0])


def test_flux_half_gap_flags_nest():
    A = build_named_operator("harper", Z2, MagneticZ2.flux(1, 2))
    grid = np.linspace(-5, 5, 201)
    dens = [spectral_density(truncate(A, folner_set(Z2, m))) for m in (5, 10, 20)]
    flags = [set(np.flatnonzero(level_flags(d, grid, 1e-12))) for d in dens]
    assert flags[0] <= flags[1] <= flags[2]
    gaps = detect_gaps(dens, grid)
    found = {int(round((g.lambda1 + 5) / 0.05)) for g in gaps}
    assert flags[0] <= found <= flags[2]


def test_ids_rows_layout():
    dens = [_density([0, 1], 0.5), _density([0, 1, 1, 2], 0.25)]
    rows = ids_rows(dens, [0.0, 1.0])
    assert rows[0] == (0, 0.0, 0.5, 0.5) and rows[-1] == (0, 1.0, 0.75, 0.5)


def test_butterfly_rows():
    assert reduced_fractions(1) == [(1, 0)]
    assert len(reduced_fractions(5)) == 10
    table = butterfly_sweep(Z2, 1, 5, 4)
    assert [(q, p) for q, p, _ in table] == reduced_fractions(5)
    for _, _, eig in table:
        assert np.max(np.abs(np.sort(eig) + np.sort(eig)[::-1])) <= 1e-9
    again = butterfly_sweep(Z2, 1, 5, 4, jobs=3)
    assert all(np.array_equal(a[2], b[2]) for a, b in zip(table, again))
    with pytest.raises(DomainError):
        butterfly_sweep(LatticeModel(3), 1, 2, 1)


@pytest.mark.parametrize("N", [5, 8, 12])
def test_cycle_multiplicity_two(N):
    C = LatticeModel(1, moduli=(N,))
    A = build_named_operator("harper", C)
    for k in range(1, (N + 1) // 2):
        if 2 * k == N:
            continue
        lam = 2 * math.cos(2 * math.pi * k / N)
        assert quotient_multiplicity(A, lam=lam, mode="numeric").multiplicity == 2
    assert quotient_multiplicity(A, lam=2, mode="exact").multiplicity == 1
    assert quotient_multiplicity(A, lam=7, mode="exact").multiplicity == 0
    assert quotient_multiplicity(A, lam=7.5, mode="numeric").multiplicity == 0


def test_cycle_multiplicity_exact_cyclotomic():
    from magharper.cli import parse_lambda
    C = LatticeModel(1, moduli=(10,))
    A = build_named_operator("harper", C)
    # 2 cos(2 pi / 10) = 2 cos(pi / 5)
    assert quotient_multiplicity(A, lam=parse_lambda("2cos(1/5)"), mode="exact").multiplicity == 2


def test_exact_mode_rejects_inexact():
    C = LatticeModel(1, moduli=(4,))
    A = AlgebraElement(C, Trivial(), 1, {Lattice((1,)): 0.3, Lattice((3,)): 0.3})
    with pytest.raises(DomainError):
        quotient_multiplicity(A, lam=0, mode="exact")


def test_lamplighter_fixture_and_trend():
    L4 = LamplighterModel(cycle=4)
    A = build_named_operator("lamplighter_rw", L4)
    rank, nullity = kernel_rank_exact(operator_matrix(A).matrix.real.astype(int).tolist())
    res = quotient_multiplicity(A, lam=0)
    assert res.multiplicity == nullity == 22 and res.dimension == 64
    assert quotient_multiplicity(A, lam=0, mode="numeric").multiplicity == 22
    vals = [float(quotient_multiplicity(build_named_operator("lamplighter_rw", LamplighterModel(cycle=n)),
                                        lam=0).normalized) for n in (4, 6, 8)]
    assert abs(vals[-1] - 1 / 3) < abs(vals[0] - 1 / 3)


def test_lamplighter_blocks_preserve_spectrum():
    A = build_named_operator("lamplighter_rw", LamplighterModel(cycle=3))
    full = np.sort(np.linalg.eigvalsh(operator_matrix(A).matrix))
    parts = np.sort(np.concatenate([np.linalg.eigvals(np.array(B, dtype=complex)).real
                                    for B in lamplighter_blocks(A)]))
    assert np.max(np.abs(full - parts)) <= 1e-10


def test_push_forward():
    sigma = MagneticZ2.flux(1, 2)
    A = build_named_operator("harper", Z2, sigma)
    T = LatticeModel(2, moduli=(4, 4))
    Aq = push_forward(A, T)
    assert Aq.model is T and len(Aq) == 4
    with pytest.raises(DomainError):
        push_forward(A, LatticeModel(2, moduli=(3, 3)))
    with pytest.raises(DomainError):
        push_forward(build_named_operator("harper", Z2, MagneticZ2(0.0, 1.0)), T)


@pytest.mark.parametrize("p,q", [(1, 2), (1, 3), (2, 5)])
def test_spectral_inclusion(p, q):
    T = LatticeModel(2, moduli=(2 * q, 2 * q))
    A = build_named_operator("harper", T, MagneticZ2.flux(p, q))
    assert spectral_inclusion(A) <= 1e-8
