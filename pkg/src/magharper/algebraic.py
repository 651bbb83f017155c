"""High-precision eigenvalues and integer minimal polynomials.

Eigenvalues are polished by shifted inverse iteration in mpmath and then
fed to an integer-relation search on ``(1, x, ..., x^n)`` driven by
sympy's integral LLL reduction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce

import mpmath
import numpy as np
import sympy
from sympy import QQ, ZZ
from sympy.polys.matrices import DomainMatrix

from .errors import DomainError, NumericError, RelationNotFound

GUARD_BITS = 64


@dataclass(frozen=True)
class HighPrecValue:
    value: mpmath.mpf
    precision: int
    residual: mpmath.mpf

    @property
    def double(self) -> float:
        return float(self.value)

    @property
    def hex(self) -> str:
        """Exact binary value as ``[-]0x<mantissa>p<exponent>``."""
        with mpmath.workprec(self.precision + GUARD_BITS):
            sign, man, exp, _ = mpmath.mpf(self.value)._mpf_
        if man == 0:
            return "0x0p0"
        return f"{'-' if sign else ''}0x{man:x}p{exp}"

    @classmethod
    def from_value(cls, x, precision: int = 256) -> "HighPrecValue":
        """Wrap an exact or mpmath number (e.g. ``mpmath.sqrt(2)``) at ``precision`` bits."""
        with mpmath.workprec(precision + GUARD_BITS):
            return cls(mpmath.mpf(x), precision, mpmath.mpf(0))


def _to_mp_matrix(M: np.ndarray):
    if np.iscomplexobj(M) and np.any(M.imag != 0):
        return mpmath.matrix([[mpmath.mpc(complex(v)) for v in row] for row in M]), True
    return mpmath.matrix([[mpmath.mpf(float(np.real(v))) for v in row] for row in M]), False


def refine_eigenvalue(T, lambda0: float, precision: int = 256, max_iter: int = 50) -> HighPrecValue:
    """Polish an eigenvalue of ``T`` (a truncation or square matrix) near ``lambda0``.

    The matrix entries are taken as exact binary numbers.  Raises
    :class:`NumericError` when two distinct eigenvalues are too close to
    tell apart from ``lambda0`` or when iteration does not converge.
    """
    if precision < 100:
        raise DomainError("precision must be at least 100 bits")
    M = np.asarray(getattr(T, "matrix", T))
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] == 0:
        raise DomainError("refine_eigenvalue needs a non-empty square matrix")
    hermitian = np.array_equal(M, M.conj().T)
    eig = np.linalg.eigvalsh(M) if hermitian else np.linalg.eigvals(M).real
    scale = max(1.0, float(np.max(np.abs(eig))))
    order = np.argsort(np.abs(eig - lambda0))
    mu = float(eig[order[0]])
    others = [float(e) for e in eig[order[1:]] if abs(e - mu) > 1e-9 * scale]
    if others:
        mu2 = min(others, key=lambda e: abs(e - lambda0))
        sep = abs(mu2 - mu)
        if sep < 1e-4 and abs(abs(mu2 - lambda0) - abs(mu - lambda0)) < 0.25 * sep:
            raise NumericError(f"lambda0={lambda0} cannot separate eigenvalues {mu} and {mu2}")
    n = M.shape[0]
    target = mpmath.mpf(2) ** (-(precision - 10))
    with mpmath.workprec(precision + GUARD_BITS):
        A, is_complex = _to_mp_matrix(M)
        eye = mpmath.eye(n)
        v = mpmath.matrix([mpmath.mpf(1) + mpmath.mpf(i) / (7 * n) for i in range(n)])
        v = v / mpmath.norm(v)
        shift = mpmath.mpf(mu) + mpmath.mpf(2) ** -40 * scale
        lam = mpmath.mpf(mu)
        res = mpmath.inf
        for _ in range(max_iter):
            try:
                w = mpmath.lu_solve(A - shift * eye, v)
            except ZeroDivisionError:
                # shift hit an eigenvalue exactly; nudge it
                shift += mpmath.mpf(2) ** (-(precision // 2)) * scale
                continue
            v = w / mpmath.norm(w)
            Av = A * v
            num = sum((mpmath.conj(v[i]) * Av[i] for i in range(n)), mpmath.mpf(0))
            lam = mpmath.re(num) if (hermitian or not is_complex) else num
            res = mpmath.norm(Av - lam * v)
            if res <= target:
                break
            if abs(lam - mu) < 1e-6 * scale:
                shift = lam  # Rayleigh quotient iteration once locked on
        else:
            raise NumericError(f"inverse iteration did not converge (residual {mpmath.nstr(res, 5)})")
        lam = mpmath.mpf(mpmath.re(lam))
        return HighPrecValue(lam, precision, mpmath.mpf(res))


# ---------------------------------------------------------------- polynomials

class PolynomialZ:
    """Primitive integer polynomial with positive leading coefficient; lowest degree first."""

    def __init__(self, coeffs, irreducible: bool | None = None):
        c = [int(v) for v in coeffs]
        while c and c[-1] == 0:
            c.pop()
        if not c:
            raise DomainError("the zero polynomial is not allowed")
        g = reduce(math.gcd, c)
        if c[-1] < 0:
            g = -g
        self.coeffs = tuple(v // g for v in c)
        self.irreducible = irreducible

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def height(self) -> int:
        return max(abs(v) for v in self.coeffs)

    def __call__(self, x):
        acc = 0
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def __eq__(self, other):
        if isinstance(other, PolynomialZ):
            return self.coeffs == other.coeffs
        return NotImplemented

    def __hash__(self):
        return hash(self.coeffs)

    def __str__(self):
        terms = []
        for k in range(self.degree, -1, -1):
            c = self.coeffs[k]
            if c == 0:
                continue
            mag = abs(c)
            body = "x" if k == 1 else f"x^{k}" if k else ""
            coef = str(mag) if (mag != 1 or k == 0) else ""
            term = f"{coef}*{body}" if coef and body else coef or body
            sign = "-" if c < 0 else "+"
            terms.append((sign, term))
        first_sign, first = terms[0]
        out = ("-" if first_sign == "-" else "") + first
        for sign, term in terms[1:]:
            out += f" {sign} {term}"
        return out

    def __repr__(self):
        return f"PolynomialZ({list(self.coeffs)})"


# ---------------------------------------------------------------- lattice reduction

def lll_reduce(basis: list[list[int]], delta: tuple[int, int] = (99, 100)) -> list[list[int]]:
    """LLL-reduce the rows of an integer basis (sympy's integral implementation).

    Rows must be linearly independent.  ``delta = p/q`` is the Lovász constant.
    """
    rows = [list(map(int, row)) for row in basis]
    if not rows:
        return rows
    M = DomainMatrix([[ZZ(v) for v in row] for row in rows], (len(rows), len(rows[0])), ZZ)
    if M.rank() < len(rows):
        raise DomainError("basis vectors are linearly dependent")
    return [[int(v) for v in row] for row in M.lll(delta=QQ(*delta)).to_list()]


def _height_cap(precision: int, degree: int, max_height: int) -> int:
    # trial heights shrink with degree so the precision budget 4 n log2(H) + 64 holds
    budget = max(precision - GUARD_BITS, 4) / (4 * degree)
    return max(1, min(max_height, int(2 ** budget)))


def _relation(x: mpmath.mpf, n: int, precision: int) -> list[int]:
    scale = mpmath.mpf(2) ** (precision - 8)
    powers = [mpmath.mpf(1)]
    for _ in range(n):
        powers.append(powers[-1] * x)
    basis = []
    for i in range(n + 1):
        row = [0] * (n + 1)
        row[i] = 1
        row.append(int(mpmath.nint(scale * powers[i])))
        basis.append(row)
    reduced = lll_reduce(basis)
    return reduced[0][: n + 1]


def _check_irreducible(p: PolynomialZ):
    X = sympy.Symbol("x")
    expr = sum(c * X ** k for k, c in enumerate(p.coeffs))
    _, factors = sympy.factor_list(expr)
    polys = [PolynomialZ(reversed(sympy.Poly(f, X).all_coeffs())) for f, _ in factors]
    polys = [f for f in polys if f.degree > 0]
    return len(polys) == 1 and factors[0][1] == 1, polys


def minimal_polynomial(x: HighPrecValue, max_degree: int = 8, max_height: int = 10**6) -> PolynomialZ:
    """Lowest-degree primitive integer polynomial with ``|p(x)| < 2^(-precision/2)``.

    Trial degree ``n`` searches heights up to
    ``min(max_height, 2^((precision - 64) / (4 n)))``.  Raises
    :class:`RelationNotFound` when nothing fits the bounds, which says nothing
    about transcendence.
    """
    if max_degree < 1:
        raise DomainError("max_degree must be positive")
    prec = x.precision
    with mpmath.workprec(prec + GUARD_BITS):
        val = mpmath.mpf(x.value)
        thresh = mpmath.mpf(2) ** (-(prec // 2))
        for n in range(1, max_degree + 1):
            H = _height_cap(prec, n, max_height)
            coeffs = _relation(val, n, prec)
            if not any(coeffs[1:]):
                continue
            p = PolynomialZ(coeffs)
            if p.height > H or abs(p(val)) >= thresh:
                continue
            irreducible, factors = _check_irreducible(p)
            if irreducible is False:
                # a factor carries the root; keep the one that vanishes
                p = min(factors, key=lambda f: abs(f(val)))
                if abs(p(val)) >= thresh:
                    continue
                irreducible, _ = _check_irreducible(p)
            p.irreducible = irreducible
            return p
    raise RelationNotFound(f"no integer polynomial of degree <= {max_degree} fits x = {mpmath.nstr(x.value, 20)}")


def identify(x: HighPrecValue, max_degree: int = 8, max_height: int = 10**6) -> dict:
    """Report ``{lambda_double, lambda_hex_highprec, poly_coeffs, residual, status}``."""
    report = {"lambda_double": x.double, "lambda_hex_highprec": x.hex,
              "poly_coeffs": None, "residual": None, "status": "not_found"}
    try:
        p = minimal_polynomial(x, max_degree, max_height)
    except RelationNotFound:
        return report
    with mpmath.workprec(x.precision + GUARD_BITS):
        r = abs(p(mpmath.mpf(x.value)))
    report["poly_coeffs"] = list(p.coeffs)
    report["residual"] = mpmath.nstr(r, 6, min_fixed=1, max_fixed=0) if r else "0"
    report["status"] = "found" if p.irreducible else "found_irreducibility_unverified"
    return report
