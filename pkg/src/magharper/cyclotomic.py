"""Exact arithmetic in cyclotomic fields Q(zeta_n).

Rational multipliers take values in roots of unity, so every quantity built
from them (operator entries, apply/multiply results, traces) lives in some
Q(zeta_n).  Elements are stored on the power basis 1, z, ..., z^(phi(n)-1)
reduced modulo the n-th cyclotomic polynomial; mixed operands are lifted to
the lcm conductor, which keeps equality and zero tests canonical.
"""

from __future__ import annotations

import cmath
import math
from fractions import Fraction
from functools import lru_cache


def _polydivmod_int(num: list[int], den: list[int]) -> tuple[list[int], list[int]]:
    # den monic, coefficient lists lowest degree first
    num = num[:]
    q = [0] * max(len(num) - len(den) + 1, 1)
    for i in range(len(num) - len(den), -1, -1):
        c = num[i + len(den) - 1]
        q[i] = c
        if c:
            for j, d in enumerate(den):
                num[i + j] -= c * d
    return q, num[: len(den) - 1]


@lru_cache(maxsize=None)
def cyclotomic_poly(n: int) -> tuple[int, ...]:
    """Integer coefficients of Phi_n, lowest degree first."""
    if n < 1:
        raise ValueError("n must be positive")
    num = [-1] + [0] * (n - 1) + [1]
    for d in range(1, n):
        if n % d == 0:
            num, rem = _polydivmod_int(num, list(cyclotomic_poly(d)))
            assert not any(rem)
    while len(num) > 1 and num[-1] == 0:
        num.pop()
    return tuple(num)


@lru_cache(maxsize=None)
def _power_table(n: int) -> tuple[tuple[int, ...], ...]:
    """Reduced coefficient vectors of z^j, j = 0..n-1."""
    phi = cyclotomic_poly(n)
    deg = len(phi) - 1
    rows = []
    cur = [1] + [0] * (deg - 1)
    for _ in range(n):
        rows.append(tuple(cur))
        # multiply by z, then reduce the top coefficient
        top = cur[-1]
        cur = [0] + cur[:-1]
        if top:
            cur = [c - top * p for c, p in zip(cur, phi[:-1])]
    return tuple(rows)


def _norm(x):
    if isinstance(x, Fraction) and x.denominator == 1:
        return int(x.numerator)
    return x


class Cyclotomic:
    """An element of Q(zeta_n)."""

    __slots__ = ("n", "coeffs")

    def __init__(self, n: int, coeffs):
        self.n = n
        self.coeffs = tuple(_norm(c) for c in coeffs)

    # construction ------------------------------------------------------
    @classmethod
    def from_exponents(cls, n: int, terms: dict[int, object]) -> "Cyclotomic":
        table = _power_table(n)
        acc = [0] * (len(table[0]))
        for j, c in terms.items():
            if c:
                for i, t in enumerate(table[j % n]):
                    if t:
                        acc[i] += c * t
        return cls(n, acc)

    @classmethod
    def root_of_unity(cls, turns) -> "Cyclotomic":
        """``exp(2 pi i * turns)`` for rational ``turns``."""
        t = Fraction(turns) % 1
        return cls.from_exponents(t.denominator, {t.numerator: 1})

    @classmethod
    def rational(cls, value) -> "Cyclotomic":
        return cls(1, (Fraction(value),))

    @staticmethod
    def coerce(x) -> "Cyclotomic":
        if isinstance(x, Cyclotomic):
            return x
        if isinstance(x, (int, Fraction)):
            return Cyclotomic.rational(x)
        if isinstance(x, float) and x.is_integer():
            return Cyclotomic.rational(int(x))
        if isinstance(x, complex) and x.imag == 0 and x.real.is_integer():
            return Cyclotomic.rational(int(x.real))
        raise TypeError(f"cannot convert {x!r} to an exact cyclotomic number")

    # field plumbing ----------------------------------------------------
    def lift(self, m: int) -> "Cyclotomic":
        if m == self.n:
            return self
        if m % self.n:
            raise ValueError(f"Q(zeta_{self.n}) does not embed in Q(zeta_{m})")
        step = m // self.n
        return Cyclotomic.from_exponents(m, {j * step: c for j, c in enumerate(self.coeffs)})

    def _common(self, other):
        other = Cyclotomic.coerce(other)
        m = math.lcm(self.n, other.n)
        return self.lift(m), other.lift(m), m

    def shrink(self) -> "Cyclotomic":
        """Re-express in the smallest conductor dividing n that holds the value."""
        if self.is_zero():
            return ZERO
        for d in sorted(d for d in range(1, self.n + 1) if self.n % d == 0):
            if d == self.n:
                return self
            # candidate: image of Q(zeta_d) is spanned by z^(j*n/d)
            cand = self._project_to(d)
            if cand is not None:
                return cand
        return self

    def _project_to(self, d: int):
        step = self.n // d
        deg_d = len(cyclotomic_poly(d)) - 1
        # solve for coefficients b_j with sum b_j z^(j*step) == self (linear system over Q)
        table = _power_table(self.n)
        cols = [table[j * step] for j in range(deg_d)]
        rows = len(self.coeffs)
        mat = [[Fraction(cols[j][i]) for j in range(deg_d)] + [Fraction(self.coeffs[i])] for i in range(rows)]
        sol = _solve_overdetermined(mat, deg_d)
        if sol is None:
            return None
        return Cyclotomic(d, sol)

    # arithmetic --------------------------------------------------------
    def __add__(self, other):
        try:
            a, b, m = self._common(other)
        except TypeError:
            return NotImplemented
        return Cyclotomic(m, [x + y for x, y in zip(a.coeffs, b.coeffs)])

    __radd__ = __add__

    def __neg__(self):
        return Cyclotomic(self.n, [-c for c in self.coeffs])

    def __sub__(self, other):
        try:
            return self + (-Cyclotomic.coerce(other))
        except TypeError:
            return NotImplemented

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return Cyclotomic(self.n, [c * other for c in self.coeffs])
        try:
            a, b, m = self._common(other)
        except TypeError:
            return NotImplemented
        prod: dict[int, object] = {}
        for i, x in enumerate(a.coeffs):
            if x:
                for j, y in enumerate(b.coeffs):
                    if y:
                        prod[i + j] = prod.get(i + j, 0) + x * y
        return Cyclotomic.from_exponents(m, prod)

    __rmul__ = __mul__

    def conjugate(self) -> "Cyclotomic":
        return Cyclotomic.from_exponents(self.n, {(-j) % self.n: c for j, c in enumerate(self.coeffs)})

    def inverse(self) -> "Cyclotomic":
        if self.is_zero():
            raise ZeroDivisionError("inverse of zero")
        # solve M_self * y = e_0 where M_self is multiplication by self
        deg = len(self.coeffs)
        table = _power_table(self.n)
        cols = []
        for j in range(deg):
            cols.append((self * Cyclotomic(self.n, table[j])).coeffs)
        mat = [[Fraction(cols[j][i]) for j in range(deg)] + [Fraction(int(i == 0))] for i in range(deg)]
        sol = _solve_overdetermined(mat, deg)
        assert sol is not None
        return Cyclotomic(self.n, sol)

    def __truediv__(self, other):
        other = Cyclotomic.coerce(other)
        return self * other.inverse()

    def __rtruediv__(self, other):
        return Cyclotomic.coerce(other) * self.inverse()

    def __pow__(self, k: int):
        if k < 0:
            return self.inverse() ** (-k)
        out = ONE
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    # comparisons / conversions ----------------------------------------
    def is_zero(self) -> bool:
        return not any(self.coeffs)

    def __bool__(self):
        return not self.is_zero()

    def __eq__(self, other):
        try:
            a, b, _ = self._common(other)
        except TypeError:
            return NotImplemented
        return a.coeffs == b.coeffs

    def __hash__(self):
        s = self.shrink()
        return hash((s.n, s.coeffs))

    def __complex__(self):
        return complex(sum(float(c) * cmath.exp(2j * cmath.pi * j / self.n)
                           for j, c in enumerate(self.coeffs) if c))

    def __abs__(self):
        return abs(complex(self))

    def is_rational(self) -> bool:
        return self.shrink().n == 1

    def as_rational(self) -> Fraction:
        s = self.shrink()
        if s.n != 1:
            raise ValueError(f"{self} is not rational")
        return Fraction(s.coeffs[0])

    def __repr__(self):
        s = self.shrink()
        if s.n == 1:
            return f"Cyclotomic({s.coeffs[0]})"
        terms = " + ".join(f"{c}*z{s.n}^{j}" for j, c in enumerate(s.coeffs) if c)
        return f"Cyclotomic({terms or 0})"


def _solve_overdetermined(mat: list[list[Fraction]], ncols: int):
    """Gauss-Jordan on an augmented rational system; None if inconsistent."""
    rows = [r[:] for r in mat]
    piv_cols = []
    r = 0
    for c in range(ncols):
        p = next((i for i in range(r, len(rows)) if rows[i][c] != 0), None)
        if p is None:
            continue
        rows[r], rows[p] = rows[p], rows[r]
        inv = 1 / rows[r][c]
        rows[r] = [v * inv for v in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][c] != 0:
                f = rows[i][c]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
        piv_cols.append(c)
        r += 1
    if any(row[-1] != 0 for row in rows[r:]):
        return None
    sol = [Fraction(0)] * ncols
    for i, c in enumerate(piv_cols):
        sol[c] = rows[i][-1]
    return sol


ZERO = Cyclotomic(1, (0,))
ONE = Cyclotomic(1, (1,))


def exact(x) -> Cyclotomic:
    """Coerce ints, Fractions and integral floats to an exact field element."""
    return Cyclotomic.coerce(x)
