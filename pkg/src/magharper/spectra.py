"""Finite truncations, spectral density functions and multiplicities.

A truncation compresses an operator to ``l^2(X)^d`` for a Følner set ``X``
(or to the whole group when it is finite).  On an extension group the set is
``p^-1(X)`` and the trace is normalized by ``1/(r #X)``, which gives every
density total mass ``d``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .algebra import AlgebraElement, build_named_operator, exact_scalar, lift_to_extension
from .cocycle import MagneticZ2, Trivial
from .cyclotomic import Cyclotomic
from .errors import DomainError, NumericError, ResourceCapError
from .groups import (ExtensionModel, FolnerScheme, GroupModel, HeisenbergModel, LamplighterModel,
                     LatticeModel, folner_set)

DEFAULT_CAP_DIM = 6000
DEFAULT_MOMENT_CAP = 12
GAP_WINDOW = 0.25


@dataclass
class Truncation:
    matrix: np.ndarray
    basis: list  # (block index a, group element)
    scheme: FolnerScheme
    operator: AlgebraElement
    r: int = 1

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def base_size(self) -> int:
        """``#X`` in the base group."""
        return len(self.scheme.X) // self.r

    @property
    def weight(self) -> float:
        """Trace weight ``1/(r #X)`` of one eigenvalue."""
        return 1.0 / (self.r * self.base_size)

    def hermitian_defect(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T), initial=0.0))


def truncate(A: AlgebraElement, scheme: FolnerScheme, cap_dim: int = DEFAULT_CAP_DIM,
             hermitian: bool = True) -> Truncation:
    """``P_X A |_{H_X}`` with entries ``<A delta_y e_b, delta_x e_a>``.

    With ``hermitian=True`` the operator must be self-adjoint; the matrix is
    then symmetrized so that ``T == T^H`` holds bit for bit.
    """
    if A.model is not scheme.model and repr(A.model) != repr(scheme.model):
        raise DomainError("operator and Følner scheme live on different groups")
    d = A.d
    X = scheme.X
    n = d * len(X)
    if n > cap_dim:
        raise ResourceCapError(f"truncation dimension {n} exceeds cap {cap_dim}")
    if A.exact:
        A = A.to_float()
    T = np.zeros((n, n), dtype=complex)
    index = scheme.index
    mul = A.model._mul
    sigma = A.sigma
    for j, y in enumerate(X):
        for g, m in A.support.items():
            i = index.get(mul(g, y))
            if i is not None:
                T[i * d:(i + 1) * d, j * d:(j + 1) * d] += m * sigma(g, y)
    if hermitian:
        defect = float(np.max(np.abs(T - T.conj().T), initial=0.0))
        if defect > 1e-10 * max(1.0, A.norm1):
            raise DomainError(f"operator is not self-adjoint (defect {defect:.3g})")
        T = (T + T.conj().T) / 2
    basis = [(a, x) for x in X for a in range(d)]
    r = scheme.model.r if isinstance(scheme.model, ExtensionModel) else 1
    return Truncation(T, basis, scheme, A, r)


def operator_matrix(A: AlgebraElement, cap_dim: int = DEFAULT_CAP_DIM, hermitian: bool = True) -> Truncation:
    """The full matrix of an operator over a finite group."""
    if not A.model.finite:
        raise DomainError("operator_matrix needs a finite group")
    return truncate(A, folner_set(A.model, 0), cap_dim, hermitian)


def _eigvalsh(M: np.ndarray) -> np.ndarray:
    if np.iscomplexobj(M) and not np.any(M.imag):
        M = M.real  # the real solver is several times faster
    try:
        return np.linalg.eigvalsh(M)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigensolver failed: {exc}") from None


@dataclass
class SpectralDensity:
    """``F(lambda) = tau_X(chi_(-inf, lambda](A^(X)))`` for one truncation."""

    eigenvalues: np.ndarray
    weight: float
    d: int
    tol: float
    level: int = 0
    resolution: float = 0.0
    truncation: Truncation | None = field(default=None, repr=False)

    def F(self, lam):
        """Mass of eigenvalues ``<= lam`` (values within ``tol`` of ``lam`` count as equal)."""
        lam = np.asarray(lam, dtype=float)
        return np.searchsorted(self.eigenvalues, lam + self.tol, side="right") * self.weight

    def F_minus(self, lam):
        lam = np.asarray(lam, dtype=float)
        return np.searchsorted(self.eigenvalues, lam - self.tol, side="left") * self.weight

    def D(self, lam):
        """Jump ``F(lam) - F(lam-)``."""
        return self.F(lam) - self.F_minus(lam)

    def mass(self, lam1, lam2, widen: bool = False):
        """``F(lam2) - F(lam1)``, optionally widened by the level's resolution on both sides."""
        w = self.resolution if widen else 0.0
        return self.F(np.asarray(lam2) + w) - self.F(np.asarray(lam1) - w)

    @property
    def total_mass(self) -> float:
        return len(self.eigenvalues) * self.weight

    def moment(self, k: int) -> float:
        return float(np.sum(self.eigenvalues ** k) * self.weight)


def spectral_density(T: Truncation, tol: float | None = None) -> SpectralDensity:
    A = T.operator
    if T.hermitian_defect() != 0.0:
        raise DomainError("spectral densities need a Hermitian truncation")
    eig = _eigvalsh(T.matrix)
    scheme = T.scheme
    if tol is None:
        tol = 1e-8 * max(A.norm1, 1.0)
    resolution = 0.0
    if not scheme.model.finite:
        kappa = max(A.propagation, 1)
        ratio = scheme.ratio if scheme.kappa == kappa else folner_set(scheme.model, scheme.level, kappa).ratio
        resolution = GAP_WINDOW * A.norm1 * ratio
    return SpectralDensity(np.sort(eig), T.weight, A.d, tol, scheme.level, resolution, T)


def certify_normalization(density: SpectralDensity, lam: float) -> float:
    """``|F(lam) - literal tau_X(P)|`` with the literal trace over the identity coset only.

    ``lam`` must not split an eigenvalue cluster.
    """
    T = density.truncation
    if T is None:
        raise DomainError("density carries no truncation")
    if np.any(np.abs(density.eigenvalues - lam) <= density.tol):
        raise DomainError(f"lambda={lam} sits on an eigenvalue; pick a value in a gap")
    try:
        w, V = np.linalg.eigh(T.matrix)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigensolver failed: {exc}") from None
    P = V[:, w <= lam]
    diag = np.einsum("ij,ij->i", P, P.conj()).real
    if T.r > 1:
        rows = [i for i, (_, x) in enumerate(T.basis) if x.k == 0]
    else:
        rows = list(range(T.dim))
    literal = float(np.sum(diag[rows])) / T.base_size
    return abs(float(density.F(lam)) - literal)


# ---------------------------------------------------------------- moments

def exact_moment(A: AlgebraElement, k: int, cap_k: int = DEFAULT_MOMENT_CAP, support_cap: int = 10**6):
    """``tau(A^k)`` from repeated twisted multiplication."""
    if k < 0 or k > cap_k:
        raise DomainError(f"moment order {k} outside [0, {cap_k}]")
    P = AlgebraElement.identity(A.model, A.sigma, A.d, A.exact)
    for _ in range(k):
        P = P @ A
        if len(P) > support_cap:
            raise ResourceCapError(f"support of A^k exceeded {support_cap}")
    return P.trace()


def truncated_moment(T: Truncation, k: int) -> float:
    """``tau_X((A^(X))^k)``."""
    return float(np.trace(np.linalg.matrix_power(T.matrix, k)).real) * T.weight


def moment_error_bound(A: AlgebraElement, level: int, k: int) -> float:
    """``||A||_1^k #dX/#X`` for the boundary of width ``k * propagation``."""
    scheme = folner_set(A.model, level, kappa=k * max(A.propagation, 1))
    return A.norm1 ** k * scheme.ratio


# ---------------------------------------------------------------- gaps

@dataclass
class GapInterval:
    lambda1: float
    lambda2: float
    levels: tuple
    masses: tuple


def level_flags(density: SpectralDensity, grid: Sequence[float], epsilon: float,
                widen: bool = True) -> np.ndarray:
    """Cells ``(grid[i], grid[i+1])`` whose (widened) mass is ``<= epsilon``."""
    g = np.asarray(grid, dtype=float)
    return density.mass(g[:-1], g[1:], widen) <= epsilon


def detect_gaps(densities: Sequence[SpectralDensity], grid: Sequence[float], epsilon: float = 1e-12,
                widen: bool = True) -> list[GapInterval]:
    """Cells with mass ``<= epsilon`` at the top level and non-increasing mass across levels.

    With ``widen`` each level measures the cell enlarged by its resolution
    ``c ||A||_1 #dX/#X``, the scale below which a truncation cannot resolve
    spectral features.
    """
    if len(densities) < 2:
        raise DomainError("gap detection needs at least two levels")
    g = np.asarray(grid, dtype=float)
    if np.any(np.diff(g) <= 0):
        raise DomainError("grid must be strictly increasing")
    masses = np.array([dn.mass(g[:-1], g[1:], widen) for dn in densities])
    out = []
    for i in range(len(g) - 1):
        col = masses[:, i]
        if col[-1] <= epsilon and np.all(np.diff(col) <= 1e-15):
            out.append(GapInterval(float(g[i]), float(g[i + 1]),
                                   tuple(dn.level for dn in densities), tuple(float(v) for v in col)))
    return out


def ids_rows(densities: Sequence[SpectralDensity], grid: Sequence[float]) -> list[tuple]:
    rows = []
    for dn in densities:
        F, D = dn.F(grid), dn.D(grid)
        rows += [(dn.level, float(l), float(f), float(j)) for l, f, j in zip(grid, F, D)]
    return rows


# ---------------------------------------------------------------- butterfly

def reduced_fractions(q_max: int) -> list[tuple[int, int]]:
    """All ``(q, p)`` with ``0 <= p < q <= q_max`` and ``gcd(p, q) = 1``, sorted."""
    if q_max < 1:
        raise DomainError("q_max must be at least 1")
    return [(q, p) for q in range(1, q_max + 1) for p in range(q) if math.gcd(p, q) == 1]


def _harper_flux_eigs(model: GroupModel, d: int, level: int, q: int, p: int, cap_dim: int) -> np.ndarray:
    sigma = MagneticZ2.flux(p, q) if p else Trivial()
    A = build_named_operator("harper", model, sigma, d)
    T = truncate(A, folner_set(model, level), cap_dim)
    return np.sort(_eigvalsh(T.matrix))


def butterfly_sweep(model: GroupModel, d: int, q_max: int, level: int, jobs: int = 1,
                    cap_dim: int = DEFAULT_CAP_DIM) -> list[tuple[int, int, np.ndarray]]:
    """Truncated Harper spectra for every reduced flux ``p/q``, rows sorted by ``(q, p)``."""
    if not (isinstance(model, LatticeModel) and model.dim == 2):
        raise DomainError("the butterfly sweep runs on Z^2 (or a torus)")
    fracs = reduced_fractions(q_max)
    work = lambda qp: _harper_flux_eigs(model, d, level, qp[0], qp[1], cap_dim)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            eigs = list(pool.map(work, fracs))
    else:
        eigs = [work(qp) for qp in fracs]
    return [(q, p, e) for (q, p), e in zip(fracs, eigs)]


# ---------------------------------------------------------------- quotients

def _projector(model: GroupModel, qmodel: GroupModel):
    if isinstance(model, LatticeModel) and isinstance(qmodel, LatticeModel):
        return lambda g: qmodel._reduce(g.coords)
    if isinstance(model, LamplighterModel) and isinstance(qmodel, LamplighterModel):
        return lambda g: qmodel._red(g.lamps, g.shift)
    if isinstance(model, HeisenbergModel) and isinstance(qmodel, HeisenbergModel):
        return lambda g: qmodel._red(g.x, g.y, g.z)
    raise DomainError(f"no projection from {model!r} to {qmodel!r}")


def push_forward(A: AlgebraElement, quotient: GroupModel | None = None) -> AlgebraElement:
    """The image of ``A`` on a finite quotient.

    The multiplier is evaluated on canonical representatives, so it must
    descend: trivial, or a rational lattice multiplier whose order divides
    every modulus.
    """
    if quotient is None:
        if A.model.finite:
            return A
        quotient = A.model.quotient_model
        if quotient is None:
            raise DomainError("no quotient given or configured")
    if not quotient.finite:
        raise DomainError("the quotient must be finite")
    sigma = A.sigma
    if not isinstance(sigma, Trivial):
        ok = (isinstance(quotient, LatticeModel) and sigma.rational
              and all(n % sigma.order == 0 for n in quotient.moduli))
        if not ok:
            raise DomainError(f"{sigma!r} does not descend to {quotient!r}")
    proj = _projector(A.model, quotient)
    out: dict = {}
    for g, m in A.support.items():
        x = proj(g)
        out[x] = out[x] + m if x in out else m
    return AlgebraElement(quotient, sigma, A.d, out, A.exact)


@dataclass(frozen=True)
class Multiplicity:
    multiplicity: int
    dimension: int
    mode: str

    @property
    def normalized(self) -> Fraction:
        return Fraction(self.multiplicity, self.dimension)


def _exact_lambda(lam):
    if isinstance(lam, float) and not lam.is_integer():
        raise DomainError("exact mode needs an exact lambda (int, Fraction or Cyclotomic)")
    return exact_scalar(lam)


def exact_rank(rows: list[list]) -> int:
    """Rank by Gauss-Jordan elimination over Q or Q(zeta_n)."""
    M = [list(r) for r in rows]
    if not M:
        return 0
    ncols = len(M[0])
    rank = 0
    for c in range(ncols):
        p = next((i for i in range(rank, len(M)) if M[i][c] != 0), None)
        if p is None:
            continue
        M[rank], M[p] = M[p], M[rank]
        x = M[rank][c]
        inv = x.inverse() if isinstance(x, Cyclotomic) else Fraction(1) / x
        pivot = [v * inv for v in M[rank]]
        M[rank] = pivot
        for i in range(rank + 1, len(M)):
            f = M[i][c]
            if f != 0:
                M[i] = [a - f * b for a, b in zip(M[i], pivot)]
        rank += 1
        if rank == len(M):
            break
    return rank


def _simplify(x):
    # drop to Fraction when an exact number is rational: much faster elimination
    if isinstance(x, Cyclotomic) and x.is_rational():
        return x.as_rational()
    return x


def lamplighter_blocks(A: AlgebraElement) -> list[list[list]]:
    """Integer blocks ``B_W`` of the lamplighter quotient, one per character ``W``.

    Functions ``f(S, t) = chi_W(S - t) phi(t)`` form an invariant subspace
    for every ``W`` subset of ``Z_n``; on it ``A`` acts on ``phi`` by
    ``B_W[t, t + t'] += A(g) chi_W(S' - t' - t)`` where ``g^-1 = (S', t')``.
    """
    model = A.model
    if not (isinstance(model, LamplighterModel) and model.finite and isinstance(A.sigma, Trivial)):
        raise DomainError("block decomposition needs an untwisted operator on a finite lamplighter")
    n, d = model.cycle, A.d
    blocks = []
    inv_support = [(model._inv(g), m) for g, m in A.support.items()]
    for mask in range(2 ** n):
        B = [[0] * (n * d) for _ in range(n * d)]
        for gi, m in inv_support:
            for t in range(n):
                sign = 1
                for v in gi.lamps:
                    if mask >> ((v - gi.shift - t) % n) & 1:
                        sign = -sign
                col = (t + gi.shift) % n
                for a in range(d):
                    for b in range(d):
                        B[t * d + a][col * d + b] += sign * m[a, b]
        blocks.append(B)
    return blocks


def quotient_multiplicity(A: AlgebraElement, quotient: GroupModel | None = None, lam=0,
                          mode: str = "exact", tol: float | None = None,
                          cap_dim: int = DEFAULT_CAP_DIM) -> Multiplicity:
    """``dim ker(A_q - lam)`` on a finite quotient, with its normalized value.

    ``exact`` uses rational/cyclotomic elimination (block-diagonalized first
    on lamplighter quotients); ``numeric`` counts eigenvalues within ``tol``.
    """
    if mode not in ("exact", "numeric"):
        raise DomainError(f"unknown mode {mode!r}")
    Aq = push_forward(A, quotient)
    model = Aq.model
    dim = Aq.d * model.order()
    lamplighter = isinstance(model, LamplighterModel) and isinstance(Aq.sigma, Trivial)
    if mode == "exact":
        lam_x = _simplify(_exact_lambda(lam))
        try:
            Ax = Aq if Aq.exact else Aq.to_exact()
        except DomainError:
            raise DomainError("exact mode needs exact operator entries") from None
        if lamplighter:
            blocks = lamplighter_blocks(AlgebraElement(model, Aq.sigma, Aq.d,
                                                        {g: _rationals(m) for g, m in Ax.support.items()}))
            nullity = 0
            for B in blocks:
                for i in range(len(B)):
                    B[i][i] -= lam_x
                nullity += len(B) - exact_rank(B)
            return Multiplicity(nullity, dim, mode)
        if dim > cap_dim:
            raise ResourceCapError(f"quotient dimension {dim} exceeds cap {cap_dim}")
        M = _exact_matrix(Ax)
        for i in range(dim):
            M[i][i] = _simplify(M[i][i] - lam_x)
        return Multiplicity(dim - exact_rank(M), dim, mode)
    lam_f = complex(lam).real
    if tol is None:
        tol = 1e-8 * max(Aq.norm1, 1.0)
    if lamplighter:
        count = 0
        for B in lamplighter_blocks(Aq.to_float() if Aq.exact else Aq):
            B = np.array(B, dtype=complex)
            eig = _eigvalsh(B) if np.array_equal(B, B.conj().T) else np.linalg.eigvals(B)
            count += int(np.sum(np.abs(eig - lam_f) <= tol))
        return Multiplicity(count, dim, mode)
    T = operator_matrix(Aq, cap_dim)
    eig = _eigvalsh(T.matrix)
    return Multiplicity(int(np.sum(np.abs(eig - lam_f) <= tol)), dim, mode)


def _rationals(m: np.ndarray) -> np.ndarray:
    out = np.empty(m.shape, dtype=object)
    for idx, v in np.ndenumerate(m):
        out[idx] = _simplify(v) if isinstance(v, Cyclotomic) else v
    return out


def _exact_matrix(A: AlgebraElement) -> list[list]:
    model = A.model
    elems = model.elements()
    index = {g: i for i, g in enumerate(elems)}
    d = A.d
    n = d * len(elems)
    M = [[Fraction(0)] * n for _ in range(n)]
    for j, y in enumerate(elems):
        for g, m in A.support.items():
            i = index[model._mul(g, y)]
            ph = A.sigma.exact(g, y)
            for a in range(d):
                for b in range(d):
                    M[i * d + a][j * d + b] = _simplify(M[i * d + a][j * d + b] + m[a, b] * ph)
    return M


# ---------------------------------------------------------------- spectral inclusion

def spectral_inclusion(A: AlgebraElement, cap_dim: int = DEFAULT_CAP_DIM) -> float:
    """Largest distance from an eigenvalue of ``A`` to the spectrum of its untwisted lift.

    ``A`` lives on a finite group with a rational multiplier.
    """
    if not A.model.finite:
        raise DomainError("spectral inclusion is checked on finite groups")
    ext, At = lift_to_extension(A)
    e1 = _eigvalsh(operator_matrix(A, cap_dim).matrix)
    e2 = np.sort(_eigvalsh(operator_matrix(At, cap_dim).matrix))
    pos = np.clip(np.searchsorted(e2, e1), 1, len(e2) - 1)
    dist = np.minimum(np.abs(e1 - e2[pos - 1]), np.abs(e1 - e2[pos]))
    return float(np.max(dist))
