"""Exact word arithmetic for the supported group families.

Elements are small immutable value objects; the law lives on a
:class:`GroupModel`, which also carries the generating set, the amenability
flag and optional finite-quotient parameters.  Finite quotients are
themselves group models (``LatticeModel(moduli=...)``,
``LamplighterModel(cycle=...)``) so everything downstream works on them
unchanged.

Conventions fixed here:

* Heisenberg: ``(x,y,z)(x',y',z') = (x+x', y+y', z+z'+x*y')``, i.e. the
  upper unitriangular matrix ``[[1,x,z],[0,1,y],[0,0,1]]``.
* Lamplighter ``Z2 wr Z``: ``(S,t)(S',t') = (S ^ (t+S'), t+t')`` with ``^``
  the symmetric difference.  ``t = ({},1)``, ``a = ({0},0)``.
* Free words use signed generator indices ``±1..±k``.
* Extension ``G^sigma`` by ``Z_r``: ``(k1,g1)(k2,g2) = (k1+k2+r*phase(g1,g2), g1 g2)``
  where ``phase`` is the multiplier's exact phase in turns.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import DomainError, NotAmenableError, ResourceCapError

DEFAULT_BALL_CAP = 10**6


# ---------------------------------------------------------------- elements

@dataclass(frozen=True, order=True)
class Lattice:
    coords: tuple

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple(int(c) for c in self.coords))


@dataclass(frozen=True, order=True)
class Heisenberg:
    x: int
    y: int
    z: int


@dataclass(frozen=True, order=True)
class Lamplighter:
    lamps: tuple
    shift: int

    def __post_init__(self):
        lamps = tuple(int(v) for v in self.lamps)
        if len(set(lamps)) != len(lamps):
            raise DomainError(f"duplicate lamps in {lamps}")
        object.__setattr__(self, "lamps", tuple(sorted(lamps)))


@dataclass(frozen=True, order=True)
class FreeWord:
    letters: tuple

    def __post_init__(self):
        letters = tuple(int(v) for v in self.letters)
        for u, v in zip(letters, letters[1:]):
            if u == -v:
                raise DomainError(f"word {letters} is not freely reduced")
        if 0 in letters:
            raise DomainError("generator index 0 is not allowed")
        object.__setattr__(self, "letters", letters)


@dataclass(frozen=True, order=True)
class ExtensionElement:
    k: int
    base: object


GroupElement = Lattice | Heisenberg | Lamplighter | FreeWord | ExtensionElement


def free_reduce(letters: Iterable[int]) -> tuple:
    out: list[int] = []
    for v in letters:
        if out and out[-1] == -v:
            out.pop()
        else:
            out.append(v)
    return tuple(out)


def _xor(a: Iterable[int], b: Iterable[int]) -> tuple:
    return tuple(sorted(set(a).symmetric_difference(b)))


# ---------------------------------------------------------------- models

class GroupModel:
    """Base class; subclasses implement the law for one family."""

    family = "abstract"
    element_type: type = object
    amenable = True

    def __init__(self, generators: Sequence | None = None):
        gens = tuple(generators) if generators is not None else self.default_generators()
        for g in gens:
            self.check(g)
        missing = [g for g in gens if self.inverse(g) not in gens]
        if missing:
            # Symmetric closure keeps ball() and harper() meaningful.
            gens = gens + tuple(self.inverse(g) for g in missing)
        self.generators = tuple(dict.fromkeys(gens))

    # law --------------------------------------------------------------
    @property
    def identity(self):
        raise NotImplementedError

    def _mul(self, a, b):
        raise NotImplementedError

    def _inv(self, a):
        raise NotImplementedError

    def multiply(self, a, b):
        self.check(a)
        self.check(b)
        return self._mul(a, b)

    def inverse(self, a):
        self.check(a)
        return self._inv(a)

    def power(self, a, n: int):
        base = a if n >= 0 else self.inverse(a)
        out = self.identity
        for _ in range(abs(n)):
            out = self._mul(out, base)
        return out

    def word(self, elements: Iterable):
        out = self.identity
        for g in elements:
            out = self.multiply(out, g)
        return out

    def check(self, a):
        if not isinstance(a, self.element_type):
            raise DomainError(f"{a!r} is not an element of the {self.family} family")

    # finiteness / quotients --------------------------------------------
    @property
    def finite(self) -> bool:
        return False

    def order(self) -> int:
        raise DomainError(f"{self.family} group is infinite")

    def elements(self) -> list:
        raise DomainError(f"cannot list elements of the infinite {self.family} group")

    quotient_model: "GroupModel | None" = None

    def _project(self, a):
        raise DomainError(f"no quotient configured on {self}")

    def folner_elements(self, level: int) -> list:
        raise NotAmenableError(f"{self.family} group is not amenable")

    def random_element(self, rng, radius: int = 4):
        """A random word of length <= radius in the generators."""
        out = self.identity
        for _ in range(int(rng.integers(0, radius + 1))):
            out = self._mul(out, self.generators[int(rng.integers(len(self.generators)))])
        return out

    def __repr__(self):
        return f"{type(self).__name__}({self.describe()})"

    def describe(self) -> str:
        return ""


class LatticeModel(GroupModel):
    """``Z^d``, or ``(Z_N1 x ... x Z_Nd)`` when ``moduli`` is given."""

    family = "lattice"
    element_type = Lattice

    def __init__(self, dim: int = 2, moduli: Sequence[int] | None = None,
                 generators=None, quotient: Sequence[int] | None = None):
        if dim < 1:
            raise DomainError("lattice dimension must be positive")
        self.dim = dim
        self.moduli = tuple(int(n) for n in moduli) if moduli is not None else None
        if self.moduli is not None and (len(self.moduli) != dim or min(self.moduli) < 1):
            raise DomainError(f"bad moduli {moduli} for dimension {dim}")
        super().__init__(generators)
        if quotient is not None:
            if self.moduli is not None:
                raise DomainError("quotient of a finite lattice is not supported")
            self.quotient_model = LatticeModel(dim, moduli=quotient)

    def describe(self):
        return f"dim={self.dim}" + (f", moduli={self.moduli}" if self.moduli else "")

    def default_generators(self):
        gens = []
        for i in range(self.dim):
            for s in (1, -1):
                v = [0] * self.dim
                v[i] = s
                gens.append(self._reduce(v))
        return gens

    def _reduce(self, coords) -> Lattice:
        if self.moduli is None:
            return Lattice(tuple(coords))
        return Lattice(tuple(c % n for c, n in zip(coords, self.moduli)))

    def check(self, a):
        super().check(a)
        if len(a.coords) != self.dim:
            raise DomainError(f"{a} does not live in Z^{self.dim}")
        if self.moduli is not None and any(not 0 <= c < n for c, n in zip(a.coords, self.moduli)):
            raise DomainError(f"{a} is not reduced modulo {self.moduli}")

    @property
    def identity(self):
        return Lattice((0,) * self.dim)

    def _mul(self, a, b):
        return self._reduce([x + y for x, y in zip(a.coords, b.coords)])

    def _inv(self, a):
        return self._reduce([-x for x in a.coords])

    @property
    def finite(self):
        return self.moduli is not None

    def order(self):
        if self.moduli is None:
            return super().order()
        out = 1
        for n in self.moduli:
            out *= n
        return out

    def elements(self):
        if self.moduli is None:
            return super().elements()
        return [Lattice(c) for c in itertools.product(*(range(n) for n in self.moduli))]

    def _project(self, a):
        if self.quotient_model is None:
            return super()._project(a)
        return self.quotient_model._reduce(a.coords)

    def folner_elements(self, level):
        if self.finite:
            return self.elements()
        r = range(-level, level + 1)
        return [Lattice(c) for c in itertools.product(*([r] * self.dim))]


class HeisenbergModel(GroupModel):
    """Discrete Heisenberg group, optionally reduced modulo ``modulus``."""

    family = "heisenberg"
    element_type = Heisenberg

    def __init__(self, generators=None, modulus: int | None = None, quotient: int | None = None):
        self.modulus = modulus
        super().__init__(generators)
        if quotient is not None:
            self.quotient_model = HeisenbergModel(modulus=quotient)

    def describe(self):
        return f"modulus={self.modulus}" if self.modulus else ""

    def default_generators(self):
        return [self._red(1, 0, 0), self._red(-1, 0, 0), self._red(0, 1, 0), self._red(0, -1, 0)]

    def _red(self, x, y, z):
        n = self.modulus
        if n is None:
            return Heisenberg(x, y, z)
        return Heisenberg(x % n, y % n, z % n)

    def check(self, a):
        super().check(a)
        n = self.modulus
        if n is not None and not all(0 <= v < n for v in (a.x, a.y, a.z)):
            raise DomainError(f"{a} is not reduced modulo {n}")

    @property
    def identity(self):
        return Heisenberg(0, 0, 0)

    def _mul(self, a, b):
        return self._red(a.x + b.x, a.y + b.y, a.z + b.z + a.x * b.y)

    def _inv(self, a):
        return self._red(-a.x, -a.y, -a.z + a.x * a.y)

    @property
    def finite(self):
        return self.modulus is not None

    def order(self):
        return self.modulus ** 3 if self.finite else super().order()

    def elements(self):
        if not self.finite:
            return super().elements()
        r = range(self.modulus)
        return [Heisenberg(*v) for v in itertools.product(r, r, r)]

    def _project(self, a):
        if self.quotient_model is None:
            return super()._project(a)
        return self.quotient_model._red(a.x, a.y, a.z)

    def folner_elements(self, level):
        if self.finite:
            return self.elements()
        m = level
        r = range(-m, m + 1)
        return [Heisenberg(x, y, z) for x in r for y in r for z in range(-m * m, m * m + 1)]


def abelianize_heisenberg(a: Heisenberg) -> Lattice:
    """The homomorphism ``(x,y,z) -> (x,y)`` onto ``Z^2``."""
    return Lattice((a.x, a.y))


class LamplighterModel(GroupModel):
    """``Z2 wr Z``, or ``Z2 wr Z_n`` when ``cycle=n``.

    Default generators are ``t, at`` and their inverses, the support of
    the random-walk operator.
    """

    family = "lamplighter"
    element_type = Lamplighter

    def __init__(self, generators=None, cycle: int | None = None, quotient: int | None = None):
        if cycle is not None and cycle < 1:
            raise DomainError("cycle length must be positive")
        self.cycle = cycle
        super().__init__(generators)
        if quotient is not None:
            if cycle is not None:
                raise DomainError("quotient of a finite lamplighter is not supported")
            self.quotient_model = LamplighterModel(cycle=quotient)

    def describe(self):
        return f"cycle={self.cycle}" if self.cycle else ""

    @property
    def t(self):
        return self._red((), 1)

    @property
    def a(self):
        return Lamplighter((0,), 0)

    def default_generators(self):
        t, a = self.t, self.a
        at = self._mul(a, t)
        return [t, at, self._inv(t), self._inv(at)]

    def _red(self, lamps, shift):
        n = self.cycle
        if n is None:
            return Lamplighter(tuple(lamps), shift)
        parity: dict[int, int] = {}
        for v in lamps:
            parity[v % n] = parity.get(v % n, 0) ^ 1
        return Lamplighter(tuple(k for k, p in parity.items() if p), shift % n)

    def check(self, a):
        super().check(a)
        n = self.cycle
        if n is not None and not (0 <= a.shift < n and all(0 <= v < n for v in a.lamps)):
            raise DomainError(f"{a} is not reduced modulo {n}")

    @property
    def identity(self):
        return Lamplighter((), 0)

    def _mul(self, a, b):
        moved = [a.shift + v for v in b.lamps]
        if self.cycle is not None:
            moved = [v % self.cycle for v in moved]
        return self._red(_xor(a.lamps, moved), a.shift + b.shift)

    def _inv(self, a):
        return self._red([v - a.shift for v in a.lamps], -a.shift)

    @property
    def finite(self):
        return self.cycle is not None

    def order(self):
        return self.cycle * 2 ** self.cycle if self.finite else super().order()

    def elements(self):
        if not self.finite:
            return super().elements()
        n = self.cycle
        out = []
        for t in range(n):
            for mask in range(2 ** n):
                out.append(Lamplighter(tuple(i for i in range(n) if mask >> i & 1), t))
        return out

    def _project(self, a):
        if self.quotient_model is None:
            return super()._project(a)
        return self.quotient_model._red(a.lamps, a.shift)

    def folner_elements(self, level):
        """``{(S,t): |t| <= n, S in [t-n, t+n]}``.

        The lamp window moves with the lamplighter so the set is almost
        invariant under *left* multiplication, which is how operators
        propagate supports.
        """
        if self.finite:
            return self.elements()
        n = level
        out = []
        for t in range(-n, n + 1):
            window = range(t - n, t + n + 1)
            for mask in range(2 ** (2 * n + 1)):
                out.append(Lamplighter(tuple(v for i, v in enumerate(window) if mask >> i & 1), t))
        return out


class FreeGroupModel(GroupModel):
    family = "free"
    element_type = FreeWord
    amenable = False

    def __init__(self, rank: int = 2, generators=None):
        if rank < 1:
            raise DomainError("free group rank must be positive")
        self.rank = rank
        super().__init__(generators)

    def describe(self):
        return f"rank={self.rank}"

    def default_generators(self):
        return [FreeWord((s * i,)) for i in range(1, self.rank + 1) for s in (1, -1)]

    def check(self, a):
        super().check(a)
        if any(abs(v) > self.rank for v in a.letters):
            raise DomainError(f"{a} uses a generator beyond rank {self.rank}")

    @property
    def identity(self):
        return FreeWord(())

    def _mul(self, a, b):
        return FreeWord(free_reduce(a.letters + b.letters))

    def _inv(self, a):
        return FreeWord(tuple(-v for v in reversed(a.letters)))


class ExtensionModel(GroupModel):
    """Central extension of ``base`` by ``Z_r`` built from a rational multiplier.

    Residue ``k`` stands for ``z = exp(2 pi i k / r)``.  The projection to the
    base drops ``k``.
    """

    family = "extension"
    element_type = ExtensionElement

    def __init__(self, base: GroupModel, sigma, r: int | None = None, generators=None):
        order = sigma.order if r is None else r
        if order is None:
            raise DomainError("the extension needs a rational multiplier")
        if sigma.order is None or order % sigma.order:
            raise DomainError(f"sigma^{order} is not identically 1")
        self.base = base
        self.sigma = sigma
        self.r = int(order)
        self.amenable = base.amenable
        self.quotient_model = base
        super().__init__(generators)

    def describe(self):
        return f"base={self.base!r}, r={self.r}"

    def default_generators(self):
        gens = [ExtensionElement(0, g) for g in self.base.generators]
        if self.r > 1:
            gens += [ExtensionElement(1, self.base.identity), ExtensionElement(self.r - 1, self.base.identity)]
        return gens

    def _k(self, a, b) -> int:
        turns = self.sigma.phase(a, b) * self.r
        if turns.denominator != 1:
            raise DomainError(f"sigma({a},{b}) is not an r-th root of unity for r={self.r}")
        return int(turns)

    def check(self, a):
        super().check(a)
        if not 0 <= a.k < self.r:
            raise DomainError(f"residue {a.k} outside [0,{self.r})")
        self.base.check(a.base)

    @property
    def identity(self):
        return ExtensionElement(0, self.base.identity)

    def _mul(self, a, b):
        k = (a.k + b.k + self._k(a.base, b.base)) % self.r
        return ExtensionElement(k, self.base._mul(a.base, b.base))

    def _inv(self, a):
        g = a.base
        k = (-a.k - self._k(g, self.base._inv(g))) % self.r
        return ExtensionElement(k, self.base._inv(g))

    @property
    def finite(self):
        return self.base.finite

    def order(self):
        return self.r * self.base.order()

    def elements(self):
        return [ExtensionElement(k, g) for g in self.base.elements() for k in range(self.r)]

    def _project(self, a):
        return a.base

    def lift(self, X: Iterable) -> list:
        """Preimage ``p^{-1}(X)`` in canonical order."""
        return [ExtensionElement(k, g) for g in X for k in range(self.r)]

    def folner_elements(self, level):
        return self.lift(self.base.folner_elements(level))


# ---------------------------------------------------------------- operations

def multiply(model: GroupModel, a, b):
    return model.multiply(a, b)


def inverse(model: GroupModel, a):
    return model.inverse(a)


def ball(model: GroupModel, radius: int, cap: int = DEFAULT_BALL_CAP) -> list:
    """Elements of word length <= radius, ordered by (length, element)."""
    if radius < 0:
        raise DomainError("radius must be nonnegative")
    layers = ball_layers(model, radius, cap)
    return [g for layer in layers for g in layer]


def ball_layers(model: GroupModel, radius: int, cap: int = DEFAULT_BALL_CAP) -> list[list]:
    """Spheres of radius 0..radius, each sorted."""
    layers = []
    for r, layer in enumerate(_spheres(model, cap)):
        layers.append(layer)
        if r == radius or not layer:
            break
    return layers


def _spheres(model: GroupModel, cap: int):
    seen = {model.identity}
    frontier = [model.identity]
    yield frontier
    while frontier:
        nxt = set()
        for g in frontier:
            for s in model.generators:
                h = model._mul(g, s)
                if h not in seen:
                    nxt.add(h)
        seen |= nxt
        if len(seen) > cap:
            raise ResourceCapError(f"ball enumeration exceeded cap {cap}")
        frontier = sorted(nxt)
        yield frontier


def word_length(model: GroupModel, a, max_radius: int = 64, cap: int = DEFAULT_BALL_CAP) -> int:
    """Word length by breadth-first search (free words and lattices short-cut)."""
    model.check(a)
    if isinstance(model, FreeGroupModel) and set(model.generators) == set(model.default_generators()):
        return len(a.letters)
    if isinstance(model, LatticeModel) and not model.finite \
            and set(model.generators) == set(model.default_generators()):
        return sum(abs(c) for c in a.coords)
    for r, layer in enumerate(_spheres(model, cap)):
        if r > max_radius:
            break
        if a in layer:
            return r
    raise ResourceCapError(f"{a} not reached within radius {max_radius}")


@dataclass(frozen=True)
class FolnerScheme:
    """A Følner set ``X_m`` with its outer kappa-boundary.

    The boundary is ``B_kappa * X \\ X`` (left multiplication), the region a
    propagation-kappa operator can reach from ``X``.
    """

    model: GroupModel
    level: int
    kappa: int
    X: tuple
    boundary: tuple
    index: dict = field(repr=False, compare=False)

    @property
    def ratio(self) -> float:
        return len(self.boundary) / len(self.X)

    def __len__(self):
        return len(self.X)


def folner_set(model: GroupModel, level: int, kappa: int = 1) -> FolnerScheme:
    if not model.amenable:
        raise NotAmenableError(f"{model!r} admits no Følner scheme")
    if level < 1 and not model.finite:
        raise DomainError("level must be positive")
    if kappa < 0:
        raise DomainError("kappa must be nonnegative")
    X = tuple(model.folner_elements(level))
    index = {g: i for i, g in enumerate(X)}
    if model.finite:
        boundary: tuple = ()
    else:
        B = ball(model, kappa)
        outside = {model._mul(b, x) for x in X for b in B} - index.keys()
        boundary = tuple(sorted(outside))
    return FolnerScheme(model, level, kappa, X, boundary, index)


def quotient_project(model: GroupModel, a):
    model.check(a)
    return model._project(a)


def is_symmetric(model: GroupModel, elements: Iterable) -> bool:
    s = set(elements)
    return all(model._inv(g) in s for g in s)
