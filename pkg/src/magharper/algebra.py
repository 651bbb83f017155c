"""Matrices over the twisted group algebra ``K(G, sigma)``.

An :class:`AlgebraElement` is a finitely supported map ``g -> A(g)`` of
``d x d`` blocks, read as the operator ``sum_g A(g) L_g`` on ``l^2(G)^d``:

    (A f)(x) = sum_h A(x h^-1) sigma(x h^-1, h) f(h)

Blocks are complex doubles by default.  With ``exact=True`` they are numpy
object arrays of :class:`~magharper.cyclotomic.Cyclotomic` numbers and the
multiplier is evaluated as exact roots of unity, so identities can be checked
with ``==`` instead of a tolerance.
"""

from __future__ import annotations

import json
from fractions import Fraction
from typing import Mapping

import numpy as np

from .cocycle import Multiplier, PhaseMap, Trivial, coboundary_twist, unit
from .config import (build_group, build_multiplier, decode_element, encode_element,
                     group_config, multiplier_config)
from .cyclotomic import ZERO, Cyclotomic
from .errors import DomainError
from .groups import ExtensionElement, ExtensionModel, GroupModel, LamplighterModel, is_symmetric, word_length


# ---------------------------------------------------------------- scalars and blocks

def exact_scalar(x) -> Cyclotomic:
    """Exact form of ints, Fractions and Gaussian integers (``complex`` with integral parts)."""
    if isinstance(x, Cyclotomic):
        return x
    if isinstance(x, (complex, np.complexfloating)) and x.imag != 0:
        if not (float(x.real).is_integer() and float(x.imag).is_integer()):
            raise DomainError(f"{x!r} has no exact form")
        return Cyclotomic.from_exponents(4, {0: int(x.real), 1: int(x.imag)})
    if isinstance(x, (np.integer, np.floating, np.complexfloating)):
        x = complex(x) if isinstance(x, np.complexfloating) else x.item()
    try:
        return Cyclotomic.coerce(x)
    except TypeError:
        raise DomainError(f"{x!r} has no exact form") from None


def _block(value, d: int, exact: bool) -> np.ndarray:
    if exact:
        arr = np.asarray(value, dtype=object)
        if arr.ndim == 0:
            if d != 1:
                raise DomainError("scalar coefficient given for d > 1")
            arr = arr.reshape(1, 1)
        out = np.empty(arr.shape, dtype=object)
        for idx, v in np.ndenumerate(arr):
            out[idx] = exact_scalar(v)
        arr = out
    else:
        arr = np.array(value, dtype=complex)
        if arr.ndim == 0:
            if d != 1:
                raise DomainError("scalar coefficient given for d > 1")
            arr = arr.reshape(1, 1)
    if arr.shape != (d, d):
        raise DomainError(f"coefficient of shape {arr.shape}, expected {(d, d)}")
    return arr


def _vec(value, d: int, exact: bool) -> np.ndarray:
    if exact:
        arr = np.asarray(value, dtype=object).reshape(-1)
        arr = np.array([exact_scalar(v) for v in arr], dtype=object)
    else:
        arr = np.array(value, dtype=complex).reshape(-1)
    if arr.shape != (d,):
        raise DomainError(f"vector entry of length {arr.shape[0]}, expected {d}")
    return arr


def _is_zero(arr: np.ndarray, exact: bool) -> bool:
    if exact:
        return all(v.is_zero() for v in arr.flat)
    return not np.any(arr)


def _zeros(shape, exact: bool) -> np.ndarray:
    if exact:
        out = np.empty(shape, dtype=object)
        out.fill(ZERO)
        return out
    return np.zeros(shape, dtype=complex)


def _identity_block(d: int, exact: bool) -> np.ndarray:
    out = _zeros((d, d), exact)
    for i in range(d):
        out[i, i] = Cyclotomic.rational(1) if exact else 1.0
    return out


def _to_float(arr: np.ndarray) -> np.ndarray:
    if arr.dtype == object:
        return np.array([complex(v) for v in arr.flat], dtype=complex).reshape(arr.shape)
    return arr


def _phase(sigma: Multiplier, a, b, exact: bool):
    return sigma.exact(a, b) if exact else sigma(a, b)


def _same(x, y) -> bool:
    return x is y or repr(x) == repr(y)


# ---------------------------------------------------------------- vectors

class VectorFS:
    """A finitely supported vector ``f: G -> C^d``."""

    def __init__(self, model: GroupModel, d: int, data: Mapping, exact: bool = False):
        self.model = model
        self.d = d
        self.exact = exact
        clean = {}
        for g, v in data.items():
            model.check(g)
            arr = _vec(v, d, exact)
            if not _is_zero(arr, exact):
                clean[g] = arr
        self.data = dict(sorted(clean.items()))

    @classmethod
    def delta(cls, model, g, d: int = 1, component: int = 0, exact: bool = False) -> "VectorFS":
        v = _zeros((d,), exact)
        v[component] = Cyclotomic.rational(1) if exact else 1.0
        return cls(model, d, {g: v}, exact)

    @classmethod
    def random(cls, model: GroupModel, d: int, rng, size: int = 6, radius: int = 4,
               exact: bool = False) -> "VectorFS":
        data = {}
        for _ in range(size):
            g = model.random_element(rng, radius)
            if exact:
                re, im = rng.integers(-3, 4, size=(2, d))
                data[g] = [complex(int(a), int(b)) for a, b in zip(re, im)]
            else:
                data[g] = rng.normal(size=d) + 1j * rng.normal(size=d)
        return cls(model, d, data, exact)

    def __getitem__(self, g) -> np.ndarray:
        v = self.data.get(g)
        return v if v is not None else _zeros((self.d,), self.exact)

    def __iter__(self):
        return iter(self.data.items())

    def __len__(self):
        return len(self.data)

    @property
    def support(self) -> list:
        return list(self.data)

    def _check(self, other: "VectorFS"):
        if not _same(self.model, other.model) or self.d != other.d:
            raise DomainError("vectors live on different spaces")

    def __add__(self, other: "VectorFS") -> "VectorFS":
        self._check(other)
        exact = self.exact and other.exact
        out = {}
        for src in (self, other):
            for g, v in src:
                v = v if exact else _to_float(v)
                out[g] = out[g] + v if g in out else v
        return VectorFS(self.model, self.d, out, exact)

    def __neg__(self):
        return VectorFS(self.model, self.d, {g: -v for g, v in self}, self.exact)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c) -> "VectorFS":
        return VectorFS(self.model, self.d, {g: v * c for g, v in self}, self.exact)

    def to_float(self) -> "VectorFS":
        return VectorFS(self.model, self.d, {g: _to_float(v) for g, v in self}, False)

    def inner(self, other: "VectorFS"):
        """``<f, u> = sum_x f(x) . conj(u(x))``, linear in ``f``."""
        self._check(other)
        exact = self.exact and other.exact
        total = ZERO if exact else 0j
        for g, v in self:
            if g in other.data:
                u = other.data[g]
                if exact:
                    for a, b in zip(v, u):
                        total = total + a * b.conjugate()
                else:
                    total += complex(np.dot(_to_float(v), np.conj(_to_float(u))))
        return total

    def max_abs(self) -> float:
        return max((float(np.max(np.abs(_to_float(v)))) for _, v in self), default=0.0)

    def is_zero(self) -> bool:
        return not self.data

    def __eq__(self, other):
        if not isinstance(other, VectorFS):
            return NotImplemented
        return (self - other).is_zero()

    def __repr__(self):
        return f"VectorFS(d={self.d}, support={len(self.data)}, exact={self.exact})"


# ---------------------------------------------------------------- algebra elements

class AlgebraElement:
    """An element of ``M_d(K(G, sigma))``; immutable once built."""

    def __init__(self, model: GroupModel, sigma: Multiplier, d: int, support: Mapping,
                 exact: bool = False):
        if d < 1:
            raise DomainError("block size must be positive")
        if exact and not sigma.rational:
            raise DomainError("exact mode needs a rational multiplier")
        self.model = model
        self.sigma = sigma
        self.d = d
        self.exact = exact
        clean = {}
        for g, m in support.items():
            model.check(g)
            arr = _block(m, d, exact)
            if not _is_zero(arr, exact):
                clean[g] = arr
        self.support = dict(sorted(clean.items()))

    # construction ------------------------------------------------------
    @classmethod
    def delta(cls, model, sigma, g, d: int = 1, coeff=None, exact: bool = False) -> "AlgebraElement":
        block = _identity_block(d, exact) if coeff is None else coeff
        return cls(model, sigma, d, {g: block}, exact)

    @classmethod
    def identity(cls, model, sigma, d: int = 1, exact: bool = False) -> "AlgebraElement":
        return cls.delta(model, sigma, model.identity, d, exact=exact)

    @classmethod
    def random(cls, model, sigma, d: int, rng, size: int = 5, radius: int = 3,
               exact: bool = False) -> "AlgebraElement":
        """Random coefficients on random words; Gaussian integers in exact mode."""
        supp = {}
        for _ in range(size):
            g = model.random_element(rng, radius)
            if exact:
                re, im = rng.integers(-3, 4, size=(2, d, d))
                supp[g] = [[complex(int(a), int(b)) for a, b in zip(r1, r2)] for r1, r2 in zip(re, im)]
            else:
                supp[g] = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        return cls(model, sigma, d, supp, exact)

    def _like(self, support, sigma=None, exact=None) -> "AlgebraElement":
        return AlgebraElement(self.model, self.sigma if sigma is None else sigma, self.d, support,
                              self.exact if exact is None else exact)

    def to_float(self) -> "AlgebraElement":
        return self._like({g: _to_float(m) for g, m in self.support.items()}, exact=False)

    def to_exact(self) -> "AlgebraElement":
        return self._like(dict(self.support), exact=True)

    # access -------------------------------------------------------------
    def __getitem__(self, g) -> np.ndarray:
        m = self.support.get(g)
        return m if m is not None else _zeros((self.d, self.d), self.exact)

    def __len__(self):
        return len(self.support)

    @property
    def elements(self) -> list:
        return list(self.support)

    @property
    def propagation(self) -> int:
        """Largest word length in the support."""
        return max((word_length(self.model, g) for g in self.support), default=0)

    @property
    def norm1(self) -> float:
        """``sum_g ||A(g)||_op``, a bound on the operator norm."""
        return float(sum(np.linalg.norm(_to_float(m), 2) for m in self.support.values()))

    # arithmetic --------------------------------------------------------
    def _check(self, other: "AlgebraElement"):
        if not _same(self.model, other.model):
            raise DomainError("operands live over different groups")
        if not _same(self.sigma, other.sigma):
            raise DomainError("operands carry different multipliers")
        if self.d != other.d:
            raise DomainError(f"block sizes differ: {self.d} vs {other.d}")

    def _coerced(self, other):
        # mixed exactness falls back to doubles
        if self.exact == other.exact:
            return self, other
        return self.to_float(), other.to_float()

    def __add__(self, other: "AlgebraElement") -> "AlgebraElement":
        self._check(other)
        a, b = self._coerced(other)
        out = dict(a.support)
        for g, m in b.support.items():
            out[g] = out[g] + m if g in out else m
        return a._like(out)

    def __neg__(self):
        return self._like({g: -m for g, m in self.support.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c) -> "AlgebraElement":
        if self.exact:
            c = exact_scalar(c)
        return self._like({g: m * c for g, m in self.support.items()})

    def __matmul__(self, other: "AlgebraElement") -> "AlgebraElement":
        return alg_multiply(self, other)

    def power(self, k: int) -> "AlgebraElement":
        if k < 0:
            raise DomainError("negative powers are not supported")
        out = AlgebraElement.identity(self.model, self.sigma, self.d, self.exact)
        for _ in range(k):
            out = alg_multiply(out, self)
        return out

    def max_diff(self, other: "AlgebraElement") -> float:
        self._check(other)
        diff = self.to_float() - other.to_float()
        return max((float(np.max(np.abs(m))) for m in diff.support.values()), default=0.0)

    def __eq__(self, other):
        if not isinstance(other, AlgebraElement):
            return NotImplemented
        try:
            self._check(other)
        except DomainError:
            return False
        return len(self - other) == 0

    __hash__ = None

    # operator structure ------------------------------------------------
    def apply(self, f: VectorFS) -> VectorFS:
        return apply(self, f)

    def adjoint(self) -> "AlgebraElement":
        return adjoint(self)

    def trace(self):
        return trace(self)

    def is_self_adjoint(self, tol: float = 1e-12) -> bool:
        adj = adjoint(self)
        if self.exact:
            return adj == self
        return self.max_diff(adj) <= tol

    def __repr__(self):
        return (f"AlgebraElement(d={self.d}, support={len(self.support)}, sigma={self.sigma!r}, "
                f"exact={self.exact})")


def apply(A: AlgebraElement, f: VectorFS) -> VectorFS:
    """``(Af)(gh) += A(g) sigma(g, h) f(h)`` over the two supports."""
    if not _same(A.model, f.model) or A.d != f.d:
        raise DomainError("operator and vector live on different spaces")
    exact = A.exact and f.exact
    if A.exact != f.exact:
        A, f = A.to_float(), f.to_float()
    mul = A.model._mul
    out: dict = {}
    for h, v in f:
        for g, m in A.support.items():
            x = mul(g, h)
            term = (m @ v) * _phase(A.sigma, g, h, exact)
            out[x] = out[x] + term if x in out else term
    return VectorFS(A.model, A.d, out, exact)


def alg_multiply(A: AlgebraElement, B: AlgebraElement) -> AlgebraElement:
    """``(AB)(k) = sum_{gh=k} A(g) B(h) sigma(g, h)``."""
    A._check(B)
    A, B = A._coerced(B)
    mul = A.model._mul
    out: dict = {}
    for g, ma in A.support.items():
        for h, mb in B.support.items():
            k = mul(g, h)
            term = (ma @ mb) * _phase(A.sigma, g, h, A.exact)
            out[k] = out[k] + term if k in out else term
    return A._like(out)


def adjoint(A: AlgebraElement) -> AlgebraElement:
    """``A^dagger(g) = conj(sigma(g, g^-1)) A(g^-1)^*``."""
    inv = A.model._inv
    out = {}
    for g, m in A.support.items():
        gi = inv(g)
        ph = _phase(A.sigma, gi, g, A.exact).conjugate()
        out[gi] = np.conjugate(m).T * ph
    return A._like(out)


def trace(A: AlgebraElement):
    """Sum of the diagonal of the identity coefficient."""
    m = A.support.get(A.model.identity)
    if m is None:
        return ZERO if A.exact else 0j
    if A.exact:
        total = ZERO
        for i in range(A.d):
            total = total + m[i, i]
        return total
    return complex(np.trace(m))


def is_self_adjoint(A: AlgebraElement, tol: float = 1e-12) -> bool:
    return A.is_self_adjoint(tol)


# ---------------------------------------------------------------- translations

def left_translate(sigma: Multiplier, model: GroupModel, h, f: VectorFS) -> VectorFS:
    """``(L_h f)(x) = f(h^-1 x) sigma(h, h^-1 x)``.  Pass ``sigma.conjugate()`` for ``L^conj``."""
    return VectorFS(model, f.d, {model._mul(h, y): v * _phase(sigma, h, y, f.exact) for y, v in f}, f.exact)


def right_translate(sigma: Multiplier, model: GroupModel, g, f: VectorFS) -> VectorFS:
    """``(R_g f)(x) = f(xg) sigma(x, g)``."""
    gi = model._inv(g)
    out = {}
    for y, v in f:
        x = model._mul(y, gi)
        out[x] = v * _phase(sigma, x, g, f.exact)
    return VectorFS(model, f.d, out, f.exact)


def U_map(sigma: Multiplier, model: GroupModel, f: VectorFS) -> VectorFS:
    """``(U f)(x) = sigma(x, x^-1) f(x^-1)``; intertwines left and right translations."""
    out = {}
    for y, v in f:
        x = model._inv(y)
        out[x] = v * _phase(sigma, x, y, f.exact)
    return VectorFS(model, f.d, out, f.exact)


def phase_multiply(s: PhaseMap, f: VectorFS) -> VectorFS:
    """``(S f)(g) = s(g) f(g)``."""
    return VectorFS(f.model, f.d, {g: v * s.value(g, f.exact) for g, v in f}, f.exact)


def twist_coefficients(A: AlgebraElement, s: PhaseMap) -> AlgebraElement:
    """``A'(g) = s(g) A(g)`` over the multiplier making ``S A = A' S``.

    If ``sigma = s(g)s(h)conj(s(gh)) sigma'`` then ``A'`` lives over ``sigma'``,
    i.e. over ``coboundary_twist(sigma, conj(s))``.
    """
    sigma2 = coboundary_twist(A.sigma, s.conjugate(), A.model)
    return AlgebraElement(A.model, sigma2, A.d,
                          {g: m * s.value(g, A.exact) for g, m in A.support.items()}, A.exact)


# ---------------------------------------------------------------- named operators

NAMED_OPERATORS = ("harper", "dml", "lamplighter_rw", "custom")


def build_named_operator(name: str, model: GroupModel, sigma: Multiplier | None = None, d: int = 1,
                         coefficients: Mapping | None = None, exact: bool = False) -> AlgebraElement:
    """``harper``: unit weights on the generators; ``dml``: ``#S I - harper``;
    ``lamplighter_rw``: ``t + at + t^-1 + (at)^-1``; ``custom``: given coefficients."""
    sigma = sigma if sigma is not None else Trivial()
    if name not in NAMED_OPERATORS:
        raise DomainError(f"unknown operator {name!r}; choose from {NAMED_OPERATORS}")
    if name == "custom":
        if coefficients is None:
            raise DomainError("custom operators need coefficients")
        return AlgebraElement(model, sigma, d, coefficients, exact)
    if name == "lamplighter_rw":
        if not isinstance(model, LamplighterModel):
            raise DomainError("lamplighter_rw needs a lamplighter group")
        t, a = model.t, model.a
        at = model._mul(a, t)
        gens = [t, at, model._inv(t), model._inv(at)]
    else:
        gens = list(model.generators)
        if not is_symmetric(model, gens):
            raise DomainError("generating set is not symmetric")
    eye = _identity_block(d, exact)
    A = AlgebraElement(model, sigma, d, {g: eye for g in gens}, exact)
    if name == "dml":
        deg = AlgebraElement.identity(model, sigma, d, exact).scale(len(gens))
        A = deg - A
    if not A.is_self_adjoint():
        raise DomainError(f"{name} is not self-adjoint for {sigma!r}; inverse-normalize the multiplier first")
    return A


# ---------------------------------------------------------------- extension lift

def lift_to_extension(A: AlgebraElement) -> tuple[GroupModel, AlgebraElement]:
    """Untwisted operator on the central extension by ``Z_r``: ``A~(0, g) = A(g)``."""
    if not A.sigma.rational:
        raise DomainError("lifting needs a rational multiplier")
    if A.sigma.order == 1:
        return A.model, AlgebraElement(A.model, Trivial(), A.d, A.support, A.exact)
    ext = ExtensionModel(A.model, A.sigma)
    support = {ExtensionElement(0, g): m for g, m in A.support.items()}
    return ext, AlgebraElement(ext, Trivial(), A.d, support, A.exact)


def xi_map(ext: ExtensionModel, f: VectorFS) -> VectorFS:
    """``(xi f)(k, g) = conj(z_k) f(g)`` with ``z_k = exp(2 pi i k / r)``."""
    r = ext.r
    out = {}
    for g, v in f:
        for k, e in zip(range(r), ext.lift([g])):
            z = Fraction(-k, r)
            out[e] = v * (Cyclotomic.root_of_unity(z) if f.exact else unit(z))
    return VectorFS(ext, f.d, out, f.exact)


# ---------------------------------------------------------------- serialization

def _encode_exact(c: Cyclotomic) -> dict:
    s = c.shrink()
    return {"n": s.n, "coeffs": [str(Fraction(v)) for v in s.coeffs]}


def to_json(A: AlgebraElement) -> dict:
    support = []
    for g, m in A.support.items():
        fm = _to_float(m)
        entry = {"element": encode_element(g),
                 "matrix": [[float(z.real), float(z.imag)] for z in fm.flat]}
        if A.exact:
            entry["exact_matrix"] = [_encode_exact(c) for c in m.flat]
        support.append(entry)
    return {"group": group_config(A.model), "multiplier": multiplier_config(A.sigma),
            "d": A.d, "exact": A.exact, "support": support}


def from_json(doc: Mapping) -> AlgebraElement:
    try:
        model = build_group(doc["group"])
        sigma = build_multiplier(doc["multiplier"], model)
        d = int(doc["d"])
        exact = bool(doc.get("exact", False))
        support = {}
        for entry in doc["support"]:
            g = decode_element(model, entry["element"])
            if exact:
                vals = [Cyclotomic(e["n"], [Fraction(c) for c in e["coeffs"]]) for e in entry["exact_matrix"]]
                block = np.array(vals, dtype=object).reshape(d, d)
            else:
                pairs = entry["matrix"]
                if len(pairs) != d * d:
                    raise DomainError(f"matrix for {entry['element']} has {len(pairs)} entries, expected {d * d}")
                block = np.array([complex(re, im) for re, im in pairs]).reshape(d, d)
            support[g] = block
    except (KeyError, TypeError, ValueError) as exc:
        raise DomainError(f"malformed operator document: {exc}") from None
    return AlgebraElement(model, sigma, d, support, exact)


def dumps(A: AlgebraElement) -> str:
    return json.dumps(to_json(A), indent=1)


def loads(text: str) -> AlgebraElement:
    return from_json(json.loads(text))

