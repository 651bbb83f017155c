"""U(1)-valued multipliers (normalized 2-cocycles) and their manipulation.

Every multiplier evaluates to a complex unit via ``sigma(a, b)``.  Rational
multipliers additionally expose ``sigma.phase(a, b)``, the phase as an exact
fraction of a full turn in ``[0, 1)``, and ``sigma.exact(a, b)``, the same
value as an exact :class:`~magharper.cyclotomic.Cyclotomic` root of unity.
``sigma.order`` is an ``r`` with ``sigma**r == 1`` (``None`` if irrational).
"""

from __future__ import annotations

import cmath
import hashlib
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable

import numpy as np

from .cyclotomic import Cyclotomic
from .errors import DomainError
from .groups import GroupModel, Lattice, ball

TAU = 2 * math.pi


@lru_cache(maxsize=65536)
def unit(turns: Fraction) -> complex:
    """``exp(2 pi i turns)`` with exact values at quarter turns."""
    t = turns % 1
    quarter = {Fraction(0): 1 + 0j, Fraction(1, 4): 1j, Fraction(1, 2): -1 + 0j, Fraction(3, 4): -1j}
    if t in quarter:
        return quarter[t]
    x = TAU * float(t)
    return complex(math.cos(x), math.sin(x))


def _as_turns(value) -> Fraction | None:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    return None


def _lcm_orders(*orders):
    if any(o is None for o in orders):
        return None
    return math.lcm(*orders)


class Multiplier:
    """Base class; subclasses implement ``_value`` and, if rational, ``_phase``."""

    order: int | None = None
    name = "multiplier"

    @property
    def rational(self) -> bool:
        return self.order is not None

    def phase(self, a, b) -> Fraction:
        if not self.rational:
            raise DomainError(f"{self!r} is not a rational multiplier")
        return self._phase(a, b) % 1

    def __call__(self, a, b) -> complex:
        if self.rational:
            return unit(self.phase(a, b))
        return self._value(a, b)

    def exact(self, a, b) -> Cyclotomic:
        return Cyclotomic.root_of_unity(self.phase(a, b))

    def value(self, a, b, exact: bool = False):
        return self.exact(a, b) if exact else self(a, b)

    def conjugate(self) -> "Multiplier":
        return Conjugate(self)

    def _phase(self, a, b) -> Fraction:
        raise NotImplementedError

    def _value(self, a, b) -> complex:
        raise NotImplementedError


class Trivial(Multiplier):
    order = 1
    name = "trivial"

    def _phase(self, a, b):
        return Fraction(0)

    def __repr__(self):
        return "Trivial()"


def _lattice2(g) -> tuple[int, int]:
    if not isinstance(g, Lattice) or len(g.coords) != 2:
        raise DomainError(f"{g!r} is not an element of Z^2 (or a quotient of it)")
    return g.coords


class MagneticZ2(Multiplier):
    """``sigma((m',n'),(m,n)) = exp(-i(alpha1 m' n + alpha2 n' m))`` on ``Z^2``.

    Angles are radians.  Pass them through :meth:`from_turns` (fractions of
    a turn) to get a rational multiplier with exact evaluation.
    """

    name = "magnetic_z2"

    def __init__(self, alpha1: float, alpha2: float, turns: tuple | None = None):
        self.alpha1 = float(alpha1)
        self.alpha2 = float(alpha2)
        self.turns = turns
        if turns is not None:
            self.order = math.lcm(turns[0].denominator, turns[1].denominator)

    @classmethod
    def from_turns(cls, t1, t2) -> "MagneticZ2":
        t1, t2 = Fraction(t1), Fraction(t2)
        return cls(TAU * float(t1), TAU * float(t2), turns=(t1, t2))

    @classmethod
    def flux(cls, p: int, q: int) -> "MagneticZ2":
        """Rational flux ``p/q``: ``MagneticZ2(0, 2 pi p/q)``."""
        return cls.from_turns(0, Fraction(p, q))

    def _phase(self, a, b):
        (m1, n1), (m, n) = _lattice2(a), _lattice2(b)
        t1, t2 = self.turns
        return -(t1 * m1 * n + t2 * n1 * m)

    def _value(self, a, b):
        (m1, n1), (m, n) = _lattice2(a), _lattice2(b)
        return cmath.exp(-1j * (self.alpha1 * m1 * n + self.alpha2 * n1 * m))

    def __repr__(self):
        if self.turns:
            return f"MagneticZ2(turns={self.turns[0]},{self.turns[1]})"
        return f"MagneticZ2({self.alpha1!r}, {self.alpha2!r})"


class SymplecticLattice(Multiplier):
    """``exp(2 pi i theta Psi(u,v))`` on ``Z^(2g)``,
    ``Psi(u,v) = sum_j u_j v_(j+g) - u_(j+g) v_j``."""

    name = "symplectic"

    def __init__(self, theta, genus: int):
        if genus < 1:
            raise DomainError("genus must be positive")
        self.genus = genus
        self.theta_turns = _as_turns(theta)
        self.theta = float(theta)
        if self.theta_turns is not None:
            self.order = self.theta_turns.denominator

    def form(self, a, b) -> int:
        g = self.genus
        for x in (a, b):
            if not isinstance(x, Lattice) or len(x.coords) != 2 * g:
                raise DomainError(f"{x!r} is not an element of Z^{2 * g}")
        u, v = a.coords, b.coords
        return sum(u[j] * v[j + g] - u[j + g] * v[j] for j in range(g))

    def _phase(self, a, b):
        return self.theta_turns * self.form(a, b)

    def _value(self, a, b):
        return cmath.exp(1j * TAU * self.theta * self.form(a, b))

    def __repr__(self):
        return f"SymplecticLattice({self.theta_turns or self.theta}, genus={self.genus})"


def symplectic_multiplier(theta, genus: int) -> SymplecticLattice:
    return SymplecticLattice(theta, genus)


class Pullback(Multiplier):
    """``sigma(a,b) = inner(p(a), p(b))`` along a homomorphism ``p``."""

    name = "pullback"

    def __init__(self, project: Callable, inner: Multiplier):
        self.project = project
        self.inner = inner
        self.order = inner.order

    def _phase(self, a, b):
        return self.inner.phase(self.project(a), self.project(b))

    def _value(self, a, b):
        return self.inner(self.project(a), self.project(b))

    def __repr__(self):
        return f"Pullback({getattr(self.project, '__name__', 'p')}, {self.inner!r})"


class Conjugate(Multiplier):
    name = "conjugate"

    def __init__(self, inner: Multiplier):
        self.inner = inner
        self.order = inner.order

    def _phase(self, a, b):
        return -self.inner.phase(a, b)

    def _value(self, a, b):
        return self.inner(a, b).conjugate()

    def conjugate(self):
        return self.inner

    def __repr__(self):
        return f"Conjugate({self.inner!r})"


class PhaseMap:
    """A unimodular function ``s: G -> U(1)``.

    Built either from exact turns (rational, usable in exact mode) or from
    float angles in radians.
    """

    def __init__(self, turns: Callable | None = None, angle: Callable | None = None,
                 order: int | None = None, check: bool = True):
        if (turns is None) == (angle is None):
            raise ValueError("give exactly one of turns= or angle=")
        self._turns = turns
        self._angle = angle
        self.order = order if turns is not None else None

    @property
    def rational(self):
        return self._turns is not None

    def turns(self, g) -> Fraction:
        if self._turns is None:
            raise DomainError("phase map has no exact phases")
        return Fraction(self._turns(g)) % 1

    def __call__(self, g) -> complex:
        if self._turns is not None:
            return unit(self.turns(g))
        return cmath.exp(1j * self._angle(g))

    def exact(self, g) -> Cyclotomic:
        return Cyclotomic.root_of_unity(self.turns(g))

    def value(self, g, exact=False):
        return self.exact(g) if exact else self(g)

    def conjugate(self) -> "PhaseMap":
        if self._turns is not None:
            f = self._turns
            return PhaseMap(turns=lambda g: -Fraction(f(g)), order=self.order)
        h = self._angle
        return PhaseMap(angle=lambda g: -h(g))

    @classmethod
    def constant_one(cls) -> "PhaseMap":
        return cls(turns=lambda g: Fraction(0), order=1)

    @classmethod
    def random(cls, identity, seed: int = 0, denominator: int | None = None) -> "PhaseMap":
        """Deterministic pseudo-random phases keyed on the element, ``s(identity) = 1``."""

        def h(g) -> int:
            digest = hashlib.blake2b(f"{seed}|{g!r}".encode(), digest_size=8).digest()
            return int.from_bytes(digest, "big")

        if denominator is not None:
            return cls(turns=lambda g: Fraction(0 if g == identity else h(g) % denominator, denominator),
                       order=denominator)
        return cls(angle=lambda g: 0.0 if g == identity else TAU * (h(g) / 2.0**64))


class Coboundary(Multiplier):
    """``sigma'(g,h) = s(g) s(h) conj(s(gh)) sigma(g,h)``."""

    name = "coboundary"

    def __init__(self, inner: Multiplier, s, model: GroupModel):
        self.inner = inner
        self.s = s
        self.model = model
        s_order = s.order if isinstance(s, PhaseMap) and s.rational else None
        self.order = _lcm_orders(inner.order, s_order)

    def _s(self, g) -> complex:
        v = self.s(g)
        if abs(abs(v) - 1) > 1e-12:
            raise DomainError(f"s({g!r}) = {v} is not unimodular")
        return v

    def _phase(self, a, b):
        s = self.s
        return s.turns(a) + s.turns(b) - s.turns(self.model._mul(a, b)) + self.inner.phase(a, b)

    def _value(self, a, b):
        return self._s(a) * self._s(b) * self._s(self.model._mul(a, b)).conjugate() * self.inner(a, b)

    def __repr__(self):
        return f"Coboundary({self.inner!r})"


def coboundary_twist(sigma: Multiplier, s, model: GroupModel) -> Coboundary:
    """Twist ``sigma`` by the coboundary of ``s``; ``s(e) = 1`` and ``|s| = 1`` required."""
    e = model.identity
    if abs(s(e) - 1) > 1e-15:
        raise DomainError("s(identity) must be 1")
    for g in model.generators:
        if abs(abs(s(g)) - 1) > 1e-12:
            raise DomainError(f"s({g!r}) is not unimodular")
    return Coboundary(sigma, s, model)


def inverse_normalize(sigma: Multiplier, model: GroupModel) -> tuple[Multiplier, PhaseMap]:
    """Cohomologous ``sigma'`` with ``sigma'(g, g^-1) = 1``.

    ``s(g) = exp(i theta/2)`` where ``sigma(g, g^-1) = exp(i theta)`` and
    ``theta`` in ``[0, 2 pi)``; then ``sigma = s(g)s(h)conj(s(gh)) sigma'``,
    i.e. ``sigma' = coboundary_twist(sigma, conj(s))``.  ``s`` is evaluated
    on the smaller of ``g, g^-1`` so that ``s(g) = s(g^-1)`` holds exactly.
    """
    if isinstance(sigma, Trivial):
        return sigma, PhaseMap.constant_one()

    def rep(g):
        gi = model._inv(g)
        return min(g, gi)

    if sigma.rational:
        def half(g):
            c = rep(g)
            return sigma.phase(c, model._inv(c)) / 2

        s = PhaseMap(turns=half, order=2 * sigma.order)
    else:
        def half_angle(g):
            c = rep(g)
            theta = cmath.phase(sigma(c, model._inv(c))) % TAU
            return theta / 2

        s = PhaseMap(angle=half_angle)
    return Coboundary(sigma, s.conjugate(), model), s


class QuotientTable(Multiplier):
    """A multiplier tabulated on every pair of a finite group."""

    name = "table"

    def __init__(self, model: GroupModel, values: dict, turns: dict | None = None):
        if not model.finite:
            raise DomainError("tables need a finite group")
        self.model = model
        self.values = dict(values)
        self.turns = dict(turns) if turns is not None else None
        if self.turns is not None:
            self.order = math.lcm(*(t.denominator for t in self.turns.values()))

    @classmethod
    def from_multiplier(cls, model: GroupModel, sigma: Multiplier) -> "QuotientTable":
        elems = model.elements()
        values = {(a, b): sigma(a, b) for a in elems for b in elems}
        turns = {k: sigma.phase(*k) for k in values} if sigma.rational else None
        return cls(model, values, turns)

    def corrupted(self, a, b, value: complex) -> "QuotientTable":
        vals = dict(self.values)
        vals[(a, b)] = value
        return QuotientTable(self.model, vals)

    def _lookup(self, table, a, b):
        try:
            return table[(a, b)]
        except KeyError:
            raise DomainError(f"({a!r}, {b!r}) not in the table's group") from None

    def _phase(self, a, b):
        return self._lookup(self.turns, a, b)

    def _value(self, a, b):
        return self._lookup(self.values, a, b)

    def __call__(self, a, b):
        return self._value(a, b)

    def __repr__(self):
        return f"QuotientTable({self.model!r})"


def evaluate(sigma: Multiplier, a, b) -> complex:
    return sigma(a, b)


@dataclass
class CocycleReport:
    max_cocycle_residual: float
    max_normalization_residual: float
    max_inverse_symmetry_residual: float
    triples: int
    exhaustive: bool

    def ok(self, tol: float = 1e-12) -> bool:
        return max(self.max_cocycle_residual, self.max_normalization_residual,
                   self.max_inverse_symmetry_residual) <= tol


def verify(sigma: Multiplier, model: GroupModel, samples: int = 1000, seed: int = 0,
           radius: int = 4, exhaustive_limit: int = 200_000) -> CocycleReport:
    """Check the cocycle identity and normalization.

    Finite groups small enough (``|G|^3 <= exhaustive_limit``) are checked on
    every triple; otherwise ``samples`` random triples are drawn from
    ``ball(radius)``.
    """
    if samples < 1:
        raise DomainError("samples must be >= 1")
    mul = model._mul
    exhaustive = model.finite and model.order() ** 3 <= exhaustive_limit
    if exhaustive:
        pool = model.elements()
        triples = [(a, b, c) for a in pool for b in pool for c in pool]
    else:
        pool = ball(model, radius)
        rng = np.random.default_rng(seed)
        idx = rng.integers(0, len(pool), size=(samples, 3))
        triples = [(pool[i], pool[j], pool[k]) for i, j, k in idx]
    e = model.identity
    coc = norm = inv = 0.0
    for a, b, c in triples:
        lhs = sigma(b, c) * sigma(a, mul(b, c))
        rhs = sigma(mul(a, b), c) * sigma(a, b)
        coc = max(coc, abs(lhs - rhs))
    singles = pool if exhaustive else [t[0] for t in triples]
    for g in singles:
        norm = max(norm, abs(sigma(e, g) - 1), abs(sigma(g, e) - 1))
        gi = model._inv(g)
        inv = max(inv, abs(sigma(g, gi) - sigma(gi, g)))
    return CocycleReport(coc, norm, inv, len(triples), exhaustive)
