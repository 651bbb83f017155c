import cmath
import math
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from magharper.cocycle import (MagneticZ2, PhaseMap, Pullback, QuotientTable, SymplecticLattice,
                               Trivial, coboundary_twist, evaluate, inverse_normalize,
                               symplectic_multiplier, verify)
from magharper.cyclotomic import ONE
from magharper.errors import DomainError
from magharper.groups import (HeisenbergModel, Lattice, LatticeModel, abelianize_heisenberg, ball)

Z2 = LatticeModel(2)
e1, e2 = Lattice((1, 0)), Lattice((0, 1))


def test_magnetic_value_on_unit_vectors():
    a1, a2 = 0.37, 1.9
    assert evaluate(MagneticZ2(a1, a2), e1, e2) == pytest.approx(cmath.exp(-1j * a1), abs=1e-15)
    assert evaluate(MagneticZ2(a1, a2), e2, e1) == pytest.approx(cmath.exp(-1j * a2), abs=1e-15)


def test_trivial_and_normalization():
    assert evaluate(Trivial(), e1, e2) == 1
    for sigma in (MagneticZ2(0.3, 1.1), SymplecticLattice(0.2, 1)):
        for g in ball(Z2, 2):
            assert sigma(Z2.identity, g) == 1 and sigma(g, Z2.identity) == 1


def test_values_are_unimodular():
    sigma = MagneticZ2(0.3, 1.1)
    for a in ball(Z2, 3):
        for b in ball(Z2, 2):
            assert abs(abs(sigma(a, b)) - 1) <= 1e-15


def test_verify_reports():
    rep = verify(MagneticZ2(0.3, 1.1), Z2, samples=1000, seed=3)
    assert rep.triples == 1000 and rep.ok()
    zero = verify(Trivial(), Z2, samples=50, seed=0)
    assert zero.max_cocycle_residual == 0 and zero.max_normalization_residual == 0
    assert verify(MagneticZ2(0.3, 1.1), Z2, 200, seed=5) == verify(MagneticZ2(0.3, 1.1), Z2, 200, seed=5)
    with pytest.raises(DomainError):
        verify(Trivial(), Z2, samples=0)


def test_corrupted_table_is_caught():
    T = LatticeModel(2, moduli=(4, 4))
    table = QuotientTable.from_multiplier(T, MagneticZ2.flux(1, 4))
    assert verify(table, T).exhaustive and verify(table, T).ok()
    bad = table.corrupted(Lattice((1, 1)), Lattice((2, 3)), -table(Lattice((1, 1)), Lattice((2, 3))))
    assert verify(bad, T).max_cocycle_residual >= 0.1


def test_rational_order_exact():
    sigma = MagneticZ2.from_turns(Fraction(1, 6), Fraction(1, 4))
    assert sigma.order == 12
    for a in ball(Z2, 2):
        for b in ball(Z2, 2):
            assert sigma.exact(a, b) ** 12 == ONE
            assert abs(complex(sigma.exact(a, b)) - sigma(a, b)) < 1e-15


def test_flux_convention():
    sigma = MagneticZ2.flux(1, 3)
    assert sigma.alpha1 == 0 and sigma.alpha2 == pytest.approx(2 * math.pi / 3)


def test_symplectic_examples():
    s = symplectic_multiplier(Fraction(1, 4), 1)
    assert s(e1, e2) == 1j
    zero = symplectic_multiplier(0, 2)
    Z4 = LatticeModel(4)
    assert all(zero(a, b) == 1 for a in ball(Z4, 1) for b in ball(Z4, 1))
    assert verify(symplectic_multiplier(0.123, 2), Z4, 1000, seed=1).ok()
    with pytest.raises(DomainError):
        symplectic_multiplier(0.1, 0)
    with pytest.raises(DomainError):
        s(Lattice((1, 0, 0)), e1)


def _commutator_phase(sigma, a, b):
    return sigma(a, b) * sigma(b, a).conjugate()


def test_symplectic_genus_one_class():
    # the class of a Z^2 multiplier is its commutator sigma(a,b)/sigma(b,a) on the unit vectors
    theta = 0.173
    s = symplectic_multiplier(theta, 1)
    m = MagneticZ2(0.0, 4 * math.pi * theta)
    assert _commutator_phase(s, e1, e2) == pytest.approx(_commutator_phase(m, e1, e2), abs=1e-14)
    # explicit splitting: s = coboundary(b) * m with b(m, n) = exp(-2 pi i theta m n)
    b = PhaseMap(angle=lambda g: -2 * math.pi * theta * g.coords[0] * g.coords[1])
    twisted = coboundary_twist(m, b, Z2)
    for u in ball(Z2, 3):
        for v in ball(Z2, 2):
            assert twisted(u, v) == pytest.approx(s(u, v), abs=1e-12)


def test_inverse_normalize():
    sigma = MagneticZ2(math.pi, 0.0)
    sp, s = inverse_normalize(sigma, Z2)
    for g in ball(Z2, 5):
        gi = Z2.inverse(g)
        assert abs(sp(g, gi) - 1) <= 1e-12
        assert s(g) == s(gi)
        assert s(g) ** 2 == pytest.approx(sigma(g, gi), abs=1e-12)
    assert verify(sp, Z2, 1000, seed=2).ok()
    triv, one = inverse_normalize(Trivial(), Z2)
    assert isinstance(triv, Trivial) and one(e1) == 1


def test_inverse_normalize_rational_is_exact():
    sigma = MagneticZ2.from_turns(Fraction(1, 3), Fraction(1, 5))
    sp, s = inverse_normalize(sigma, Z2)
    assert sp.rational
    for g in ball(Z2, 3):
        assert sp.exact(g, Z2.inverse(g)) == ONE


def test_coboundary_twist_roundtrip():
    sigma = MagneticZ2(0.3, 1.1)
    s = PhaseMap.random(Z2.identity, seed=9)
    tw = coboundary_twist(sigma, s, Z2)
    assert verify(tw, Z2, 1000, seed=4).ok()
    back = coboundary_twist(tw, s.conjugate(), Z2)
    for a in ball(Z2, 2):
        for b in ball(Z2, 2):
            assert back(a, b) == pytest.approx(sigma(a, b), abs=1e-12)
    same = coboundary_twist(sigma, PhaseMap.constant_one(), Z2)
    assert all(same(a, b) == sigma(a, b) for a in ball(Z2, 2) for b in ball(Z2, 2))


def test_coboundary_twist_rejects_bad_maps():
    with pytest.raises(DomainError):
        coboundary_twist(Trivial(), lambda g: 2.0, Z2)
    with pytest.raises(DomainError):
        coboundary_twist(Trivial(), lambda g: 1j, Z2)


def test_pullback_is_a_cocycle():
    H = HeisenbergModel()
    sigma = Pullback(abelianize_heisenberg, MagneticZ2(0.4, 1.3))
    assert verify(sigma, H, 1000, seed=6).ok()


def test_conjugate():
    sigma = MagneticZ2(0.3, 1.1)
    c = sigma.conjugate()
    assert c(e1, e2) == sigma(e1, e2).conjugate()
    assert c.conjugate() is sigma


_small = st.integers(-6, 6)
_pt = st.builds(lambda a, b: Lattice((a, b)), _small, _small)


@settings(max_examples=200, deadline=None)
@given(_pt, _pt, _pt, st.floats(-4, 4), st.floats(-4, 4))
def test_magnetic_cocycle_identity(a, b, c, a1, a2):
    s = MagneticZ2(a1, a2)
    lhs = s(b, c) * s(a, Z2._mul(b, c))
    rhs = s(Z2._mul(a, b), c) * s(a, b)
    assert abs(lhs - rhs) <= 1e-12
    assert abs(s(a, Z2.inverse(a)) - s(Z2.inverse(a), a)) <= 1e-12


@settings(max_examples=100, deadline=None)
@given(_pt, _pt, _pt, st.fractions(0, 1, max_denominator=9), st.fractions(0, 1, max_denominator=9))
def test_rational_cocycle_identity_is_exact(a, b, c, t1, t2):
    s = MagneticZ2.from_turns(t1, t2)
    assert s.exact(b, c) * s.exact(a, Z2._mul(b, c)) == s.exact(Z2._mul(a, b), c) * s.exact(a, b)
