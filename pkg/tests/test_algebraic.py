import random

import mpmath
import numpy as np
import pytest
import sympy

from magharper.algebraic import (HighPrecValue, PolynomialZ, identify, lll_reduce, minimal_polynomial,
                                 refine_eigenvalue)
from magharper.errors import DomainError, NumericError, RelationNotFound

PREC = 256


def _close(x: HighPrecValue, exact, bits):
    with mpmath.workprec(PREC + 64):
        return abs(x.value - exact) <= mpmath.mpf(2) ** -bits


def test_refine_diagonal():
    x = refine_eigenvalue(np.diag([0.0, 2.0]), 1.9, PREC)
    assert x.value == 2 and x.precision == PREC


def test_refine_quadratic():
    x = refine_eigenvalue(np.array([[0.0, 2.0], [2.0, 2.0]]), 3.2, PREC)
    with mpmath.workprec(PREC + 64):
        assert _close(x, 1 + mpmath.sqrt(5), 200)
    assert x.residual <= mpmath.mpf(2) ** -(PREC - 10)


def test_refine_complex_hermitian():
    M = np.array([[1.0, 1j], [-1j, 1.0]])
    x = refine_eigenvalue(M, 2.01, PREC)
    assert _close(x, 2, PREC - 16)


def test_refine_ambiguous():
    with pytest.raises(NumericError):
        refine_eigenvalue(np.diag([1.0, 1.0 + 5e-5]), 1.0 + 2.5e-5, PREC)
    with pytest.raises(DomainError):
        refine_eigenvalue(np.diag([1.0]), 1.0, 64)


def test_polynomial_normal_form():
    p = PolynomialZ([4, 2, -2])
    assert p.coeffs == (-2, -1, 1) and p.degree == 2 and p.height == 2
    assert str(PolynomialZ([-12, 0, 1])) == "x^2 - 12"
    with pytest.raises(DomainError):
        PolynomialZ([0, 0])


@pytest.mark.parametrize("q,coeffs", [(3, (-2, 1)), (4, (-8, 0, 1)), (5, (-4, -2, 1)), (6, (-12, 0, 1))])
def test_four_cos_pi_over_q(q, coeffs):
    with mpmath.workprec(PREC + 64):
        x = HighPrecValue.from_value(4 * mpmath.cos(mpmath.pi / q), PREC)
        p = minimal_polynomial(x)
        assert p.coeffs == coeffs and p.irreducible
        assert abs(p(x.value)) < mpmath.mpf(2) ** -128


def test_zero_and_rational():
    assert minimal_polynomial(HighPrecValue.from_value(0)).coeffs == (0, 1)
    with mpmath.workprec(PREC + 64):
        assert minimal_polynomial(HighPrecValue.from_value(mpmath.mpf(3) / 7)).coeffs == (-3, 7)


def test_not_found_is_neutral():
    with mpmath.workprec(PREC + 64):
        x = HighPrecValue.from_value(mpmath.pi, PREC)
    with pytest.raises(RelationNotFound):
        minimal_polynomial(x, max_degree=4)
    rep = identify(x, max_degree=3)
    assert rep["status"] == "not_found" and rep["poly_coeffs"] is None


def test_identify_report():
    with mpmath.workprec(PREC + 64):
        x = HighPrecValue.from_value(1 + mpmath.sqrt(5), PREC)
    rep = identify(x)
    assert set(rep) == {"lambda_double", "lambda_hex_highprec", "poly_coeffs", "residual", "status"}
    assert rep["poly_coeffs"] == [-4, -2, 1] and rep["status"] == "found"
    assert rep["lambda_hex_highprec"].startswith("0x")
    man, exp = rep["lambda_hex_highprec"][2:].split("p")
    assert mpmath.ldexp(int(man, 16), int(exp)) == x.value


def test_lll_small_example():
    red = lll_reduce([[1, 1, 1], [-1, 0, 2], [3, 5, 6]])
    assert sorted(sum(v * v for v in r) for r in red)[0] <= 2
    assert abs(round(np.linalg.det(np.array(red, dtype=float)))) == 3
    with pytest.raises(DomainError):
        lll_reduce([[1, 2], [2, 4]])


def _random_algebraic(rng):
    X = sympy.Symbol("x")
    while True:
        deg = rng.randint(1, 4)
        coeffs = [rng.randint(-20, 20) for _ in range(deg)] + [rng.choice([i for i in range(-20, 21) if i])]
        roots = [r for r in sympy.Poly(list(reversed(coeffs)), X).nroots(n=90) if abs(sympy.im(r)) < 1e-40]
        if roots:
            return coeffs, rng.choice(roots)


def test_random_roundtrip():
    rng = random.Random(2024)
    X = sympy.Symbol("x")
    for _ in range(50):
        coeffs, root = _random_algebraic(rng)
        with mpmath.workprec(PREC + 64):
            x = HighPrecValue.from_value(mpmath.mpf(str(sympy.re(root))), PREC)
            p = minimal_polynomial(x)
            assert abs(p(x.value)) < mpmath.mpf(2) ** -(PREC // 2)
        assert p.degree <= len(coeffs) - 1
        # p divides the constructing polynomial
        build = sympy.Poly(list(reversed(coeffs)), X)
        rec = sympy.Poly(list(reversed(p.coeffs)), X)
        assert build.rem(rec).is_zero


def test_stability_under_perturbation():
    with mpmath.workprec(PREC + 64):
        base = 2 * mpmath.sqrt(3)
        for k in (-3, 1, 7):
            x = HighPrecValue.from_value(base + k * mpmath.mpf(2) ** -(PREC - 8) / 8, PREC)
            assert minimal_polynomial(x).coeffs == (-12, 0, 1)


@pytest.mark.parametrize("q", [3, 5, 7, 8])
def test_matches_findpoly(q):
    with mpmath.workprec(PREC + 64):
        v = 4 * mpmath.cos(mpmath.pi / q)
        ours = minimal_polynomial(HighPrecValue.from_value(v, PREC)).coeffs
        theirs = mpmath.findpoly(v, 8, maxcoeff=10**6)
    assert list(reversed(ours)) in (theirs, [-c for c in theirs])
