import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from magharper.algebra import (AlgebraElement, U_map, VectorFS, adjoint, alg_multiply, apply,
                               build_named_operator, dumps, left_translate, lift_to_extension, loads,
                               phase_multiply, right_translate, trace, twist_coefficients, xi_map)
from magharper.cocycle import MagneticZ2, PhaseMap, SymplecticLattice, Trivial
from magharper.errors import DomainError
from magharper.groups import (ExtensionModel, FreeGroupModel, HeisenbergModel, Lamplighter,
                              LamplighterModel, Lattice, LatticeModel)

Z2 = LatticeModel(2)
O = Lattice((0, 0))


def test_harper_on_delta():
    H = build_named_operator("harper", Z2)
    out = apply(H, VectorFS.delta(Z2, O))
    assert set(out.support) == set(Z2.generators)
    assert all(v[0] == 1 for _, v in out)


def test_apply_on_identity_delta_reads_coefficients(rng):
    sigma = MagneticZ2(0.3, 1.1)
    A = AlgebraElement.random(Z2, sigma, 2, rng)
    out = apply(A, VectorFS.delta(Z2, O, 2, 1))
    for g, m in A.support.items():
        assert np.array_equal(out[g], m[:, 1])


def test_single_generator_acts_by_twisted_shift():
    sigma = MagneticZ2(0.3, 1.1)
    g, h = Lattice((2, -1)), Lattice((1, 3))
    out = apply(AlgebraElement.delta(Z2, sigma, g), VectorFS.delta(Z2, h))
    assert out.support == [Z2._mul(g, h)]
    assert out[Z2._mul(g, h)][0] == sigma(g, h)


def test_delta_products():
    sigma = MagneticZ2.flux(1, 5)
    g, h = Lattice((1, 2)), Lattice((3, -1))
    P = alg_multiply(AlgebraElement.delta(Z2, sigma, g, exact=True), AlgebraElement.delta(Z2, sigma, h, exact=True))
    assert P.elements == [Z2._mul(g, h)] and P[Z2._mul(g, h)][0, 0] == sigma.exact(g, h)
    T = Trivial()
    assert alg_multiply(AlgebraElement.delta(Z2, T, g), AlgebraElement.delta(Z2, T, Z2.inverse(g))) \
        == AlgebraElement.identity(Z2, T)


def test_harper_square_identity_coefficient():
    H = build_named_operator("harper", Z2, d=2)
    H2 = H @ H
    assert np.array_equal(H2[O], 4 * np.eye(2))


@pytest.mark.parametrize("model,sigma", [
    (Z2, MagneticZ2(0.3, 1.1)),
    (LatticeModel(4), SymplecticLattice(0.123, 2)),
    (FreeGroupModel(2), Trivial()),
    (LamplighterModel(), Trivial()),
])
def test_multiply_matches_composition_and_adjoint_pairing(model, sigma, rng):
    for _ in range(20):
        A = AlgebraElement.random(model, sigma, 2, rng)
        B = AlgebraElement.random(model, sigma, 2, rng)
        f = VectorFS.random(model, 2, rng)
        u = VectorFS.random(model, 2, rng)
        assert (apply(A @ B, f) - apply(A, apply(B, f))).max_abs() <= 1e-12
        assert abs(apply(A, f).inner(u) - f.inner(apply(adjoint(A), u))) <= 1e-12
        assert abs(trace(A @ B) - trace(B @ A)) <= 1e-10
        assert adjoint(adjoint(A)).max_diff(A) <= 1e-15


def test_exact_mode_identities(rng):
    sigma = MagneticZ2.from_turns(Fraction(1, 3), Fraction(2, 5))
    for _ in range(5):
        A = AlgebraElement.random(Z2, sigma, 2, rng, exact=True)
        B = AlgebraElement.random(Z2, sigma, 2, rng, exact=True)
        f = VectorFS.random(Z2, 2, rng, exact=True)
        u = VectorFS.random(Z2, 2, rng, exact=True)
        assert apply(A @ B, f) == apply(A, apply(B, f))
        assert apply(A, f).inner(u) == f.inner(apply(adjoint(A), u))
        assert trace(A @ B) == trace(B @ A)


def test_adjoint_trivial_sigma():
    M = np.array([[1, 2j], [3, 4]])
    g = Lattice((1, 1))
    A = AlgebraElement(Z2, Trivial(), 2, {g: M})
    assert np.array_equal(adjoint(A)[Z2.inverse(g)], M.conj().T)
    H = build_named_operator("harper", Z2)
    assert adjoint(H) == H


def test_trace_examples():
    assert trace(build_named_operator("harper", Z2)) == 0
    assert trace(AlgebraElement.identity(Z2, Trivial(), 3)) == 3
    sigma = MagneticZ2.flux(1, 3)
    g = Lattice((2, 1))
    P = AlgebraElement.delta(Z2, sigma, g, exact=True) @ AlgebraElement.delta(Z2, sigma, Z2.inverse(g), exact=True)
    assert trace(P) == sigma.exact(g, Z2.inverse(g))


def test_named_operators():
    H = build_named_operator("harper", Z2, MagneticZ2(0.0, 0.7))
    assert len(H) == 4 and H.is_self_adjoint()
    D = build_named_operator("dml", Z2)
    assert np.array_equal(D[O], [[4]]) and trace(D) == 4
    L = LamplighterModel()
    R = build_named_operator("lamplighter_rw", L)
    assert set(R.elements) == {Lamplighter((), 1), Lamplighter((), -1), Lamplighter((0,), 1),
                               Lamplighter((-1,), -1)}
    assert R.is_self_adjoint()
    with pytest.raises(DomainError):
        build_named_operator("nope", Z2)
    with pytest.raises(DomainError):
        build_named_operator("lamplighter_rw", Z2)
    with pytest.raises(DomainError):
        build_named_operator("custom", Z2)


def test_harper_needs_normalized_multiplier():
    # sigma(g, g^-1) != 1 on a generator breaks self-adjointness of unit weights
    sigma = MagneticZ2(0.0, 0.7)
    gens = [Lattice((1, 1)), Lattice((-1, -1))]
    model = LatticeModel(2, generators=gens)
    with pytest.raises(DomainError):
        build_named_operator("harper", model, sigma)


def test_canonical_support_drops_zeros():
    A = AlgebraElement(Z2, Trivial(), 1, {O: 0, Lattice((1, 0)): 2})
    assert A.elements == [Lattice((1, 0))]
    assert len(A - A) == 0


def test_mismatch_errors(rng):
    A = AlgebraElement.random(Z2, Trivial(), 1, rng)
    with pytest.raises(DomainError):
        A @ AlgebraElement.random(Z2, Trivial(), 2, rng)
    with pytest.raises(DomainError):
        A @ AlgebraElement.random(Z2, MagneticZ2(0.1, 0.2), 1, rng)
    with pytest.raises(DomainError):
        apply(A, VectorFS.delta(HeisenbergModel(), HeisenbergModel().identity))
    with pytest.raises(DomainError):
        AlgebraElement(Z2, MagneticZ2(0.1, 0.2), 1, {}, exact=True)


def test_translations_exact(rng):
    sigma = MagneticZ2.flux(2, 7)
    bar = sigma.conjugate()
    for _ in range(10):
        f = VectorFS.random(Z2, 1, rng, exact=True)
        g, h = Z2.random_element(rng), Z2.random_element(rng)
        assert right_translate(sigma, Z2, g, left_translate(bar, Z2, h, f)) == \
            left_translate(bar, Z2, h, right_translate(sigma, Z2, g, f))
        assert U_map(sigma, Z2, left_translate(sigma, Z2, g, f)) == right_translate(sigma, Z2, g, U_map(sigma, Z2, f))


def test_right_translation_adjoint(rng):
    sigma = MagneticZ2(0.3, 1.1)
    bar = sigma.conjugate()
    for _ in range(10):
        f, u = VectorFS.random(Z2, 1, rng), VectorFS.random(Z2, 1, rng)
        g = Z2.random_element(rng)
        lhs = right_translate(bar, Z2, g, f).inner(u)
        rhs = f.inner(right_translate(bar, Z2, Z2.inverse(g), u).scale(sigma(g, Z2.inverse(g))))
        assert abs(lhs - rhs) <= 1e-12


def test_coboundary_conjugation_exact(rng):
    sigma = MagneticZ2.flux(1, 4)
    s = PhaseMap.random(Z2.identity, seed=5, denominator=6)
    for _ in range(5):
        A = AlgebraElement.random(Z2, sigma, 2, rng, exact=True)
        f = VectorFS.random(Z2, 2, rng, exact=True)
        Ap = twist_coefficients(A, s)
        assert phase_multiply(s, apply(A, f)) == apply(Ap, phase_multiply(s, f))


def test_lift_to_extension(rng):
    sigma = MagneticZ2.flux(1, 2)
    H = build_named_operator("harper", Z2, sigma, exact=True)
    ext, Ht = lift_to_extension(H)
    assert isinstance(ext, ExtensionModel) and ext.r == 2 and len(Ht) == 4
    assert isinstance(Ht.sigma, Trivial)
    for _ in range(100):
        f = VectorFS.random(Z2, 1, rng, size=3, radius=3, exact=True)
        assert apply(Ht, xi_map(ext, f)) == xi_map(ext, apply(H, f))
    same, A = lift_to_extension(build_named_operator("harper", Z2))
    assert same is Z2 and A == build_named_operator("harper", Z2)
    with pytest.raises(DomainError):
        lift_to_extension(build_named_operator("harper", Z2, MagneticZ2(0.0, 1.0)))


def test_json_roundtrip(rng):
    for sigma in (MagneticZ2.flux(1, 3), MagneticZ2(0.3, 1.1), Trivial(), SymplecticLattice(Fraction(1, 7), 1)):
        A = AlgebraElement.random(Z2, sigma, 2, rng)
        B = loads(dumps(A))
        assert B.elements == A.elements
        assert all(np.array_equal(A[g], B[g]) for g in A.elements)
        assert dumps(B) == dumps(A)
    E = AlgebraElement.random(Z2, MagneticZ2.flux(1, 3), 2, rng, exact=True)
    assert loads(dumps(E)) == E
    L = LamplighterModel()
    R = build_named_operator("lamplighter_rw", L)
    assert loads(dumps(R)) == R
    doc = json.loads(dumps(R))
    assert set(doc) == {"group", "multiplier", "d", "exact", "support"}


def test_json_rejects_malformed():
    with pytest.raises(DomainError):
        loads(json.dumps({"group": {"family": "lattice"}, "multiplier": {"kind": "trivial"}, "d": 1,
                          "support": [{"element": [0, 0], "matrix": [[1, 0], [2, 0]]}]}))


_coef = st.integers(-3, 3)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.integers(-2, 2), st.integers(-2, 2), _coef), min_size=1, max_size=4),
       st.lists(st.tuples(st.integers(-2, 2), st.integers(-2, 2), _coef), min_size=1, max_size=4),
       st.floats(-3, 3))
def test_associativity_property(a, b, alpha):
    sigma = MagneticZ2(0.0, alpha)
    A = AlgebraElement(Z2, sigma, 1, {Lattice((x, y)): c for x, y, c in a})
    B = AlgebraElement(Z2, sigma, 1, {Lattice((x, y)): c for x, y, c in b})
    C = build_named_operator("harper", Z2, sigma)
    assert ((A @ B) @ C).max_diff(A @ (B @ C)) <= 1e-12
