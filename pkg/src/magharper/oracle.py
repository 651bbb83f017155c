"""Deliberately naive reference computations.

Nothing here shares code with the production paths beyond the group law
and the multiplier: moments come from enumerating closed walks, kernel
ranks from fraction-free (Bareiss) elimination on the full matrix.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .cyclotomic import Cyclotomic
from .errors import DomainError, ResourceCapError

WALK_CAP = 5 * 10**6


@dataclass(frozen=True)
class WalkPhaseSum:
    k: int
    value: complex
    walks: int


def walk_phase_sum(A, k: int, cap: int = WALK_CAP) -> WalkPhaseSum:
    """Sum over closed walks ``g_1 ... g_k = e`` of ``tr(A(g_1) ... A(g_k))`` times the
    accumulated phase ``prod_j sigma(g_1 ... g_(j-1), g_j)``."""
    if k < 0 or k > 8:
        raise DomainError("walk enumeration supports 0 <= k <= 8")
    items = [(g, np.array([[complex(v) for v in row] for row in m])) for g, m in A.support.items()]
    if len(items) ** k > cap:
        raise ResourceCapError(f"{len(items)}^{k} walks exceed the cap {cap}")
    model, sigma = A.model, A.sigma
    e = model.identity
    total = 0j
    walks = 0
    for walk in itertools.product(items, repeat=k):
        pos = e
        phase = 1 + 0j
        mat = np.eye(A.d, dtype=complex)
        for g, m in walk:
            phase *= sigma(pos, g)
            pos = model._mul(pos, g)
            mat = mat @ m
        if pos == e:
            walks += 1
            total += phase * complex(np.trace(mat))
    return WalkPhaseSum(k, total, walks)


def walk_moment(A, k: int, cap: int = WALK_CAP) -> complex:
    return walk_phase_sum(A, k, cap).value


def kernel_rank_exact(M) -> tuple[int, int]:
    """``(rank, nullity)`` of an integer, rational or cyclotomic matrix by Bareiss elimination."""
    rows = [list(r) for r in M]
    if not rows:
        return 0, 0
    ncols = len(rows[0])
    if any(len(r) != ncols for r in rows):
        raise DomainError("ragged matrix")
    for r in rows:
        for v in r:
            if isinstance(v, float) and not v.is_integer():
                raise DomainError("kernel_rank_exact needs exact entries")
    rows = [[int(v) if isinstance(v, float) else v for v in r] for r in rows]
    nrows = len(rows)
    prev = 1
    rank = 0
    for c in range(ncols):
        if rank == nrows:
            break
        p = next((i for i in range(rank, nrows) if rows[i][c] != 0), None)
        if p is None:
            continue
        rows[rank], rows[p] = rows[p], rows[rank]
        piv = rows[rank][c]
        for i in range(rank + 1, nrows):
            a = rows[i][c]
            new = []
            for j in range(ncols):
                v = piv * rows[i][j] - a * rows[rank][j]
                new.append(_exact_div(v, prev))
            rows[i] = new
        prev = piv
        rank += 1
    return rank, ncols - rank


def _exact_div(v, d):
    if isinstance(v, Cyclotomic) or isinstance(d, Cyclotomic):
        return Cyclotomic.coerce(v) / d
    if isinstance(v, int) and isinstance(d, int):
        q, r = divmod(v, d)
        if r:
            raise ArithmeticError("Bareiss division was not exact")
        return q
    return v / d
