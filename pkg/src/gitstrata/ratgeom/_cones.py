"""Extreme rays and lineality of polyhedral cones {x : A x >= 0} in low dimension.

Rays are found by enumerating (d-1)-subsets of tight constraints and taking
the integer cross-kernel, which keeps everything in exact integer arithmetic.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import combinations
from typing import Sequence

from ._linalg import cross_kernel, nullspace, primitive


def _int_rows(rows: Sequence[Sequence[Fraction]]) -> list[tuple[int, ...]]:
    seen = []
    found = set()
    for r in rows:
        p = primitive(r)
        if any(p) and p not in found:
            found.add(p)
            seen.append(p)
    return seen


def cone_generators(
    ineqs: Sequence[Sequence[Fraction]], dim: int
) -> tuple[list[tuple[int, ...]], list[tuple[int, ...]]]:
    """Generators of {x in Q^dim : row . x >= 0 for every row}.

    Returns (extreme rays of the pointed part, basis of the lineality space),
    all as primitive integer vectors. The cone equals cone(rays) + span(lineality).
    """
    a = _int_rows(ineqs)
    lin_basis = nullspace([[Fraction(v) for v in r] for r in a], dim) if a else nullspace([], dim)
    lineality = [primitive(v) for v in lin_basis]
    eq = list(lineality)  # restrict to the orthogonal complement of the lineality space
    k = dim - len(eq)
    if k == 0:
        return [], lineality
    if k == 1:
        # Pointed part is a ray or {0}; its direction is the kernel of eq.
        cand = cross_kernel(eq) if eq else (1,)
        cand = primitive([Fraction(c) for c in cand])
        rays = [s for s in (cand, tuple(-c for c in cand)) if all(_dot(r, s) >= 0 for r in a)]
        return rays, lineality
    rays = []
    found = set()
    for subset in combinations(a, k - 1):
        mat = list(subset) + eq
        vec = cross_kernel(mat)
        if not any(vec):
            continue
        vec = primitive([Fraction(c) for c in vec])
        vals = [_dot(r, vec) for r in a]
        if all(v >= 0 for v in vals):
            ray = vec
        elif all(v <= 0 for v in vals):
            ray = tuple(-c for c in vec)
        else:
            continue
        if ray not in found:
            found.add(ray)
            rays.append(ray)
    return rays, lineality


def _dot(a, b) -> int:
    return sum(x * y for x, y in zip(a, b))
