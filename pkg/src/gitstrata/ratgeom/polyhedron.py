"""Exact generator-form polyhedra over the rationals."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import nnls

from . import _linalg
from ._cones import cone_generators
from ._lp import feasible_point

RatVec = tuple[Fraction, ...]

MAX_GENERATORS = 16
MAX_DD_RANK = 4


class DimensionError(ValueError):
    """Operands live in spaces of different rank."""


class EmptyInputError(ValueError):
    """An operation that needs a nonempty polyhedron received an empty one."""


class UnsupportedDimensionError(ValueError):
    """Input exceeds the desk-scale caps of the exact algorithms."""


def ratvec(values: Iterable) -> RatVec:
    return tuple(Fraction(v) for v in values)


def zero(rank: int) -> RatVec:
    return (Fraction(0),) * rank


def add(a: RatVec, b: RatVec) -> RatVec:
    return tuple(x + y for x, y in zip(a, b))


def sub(a: RatVec, b: RatVec) -> RatVec:
    return tuple(x - y for x, y in zip(a, b))


def scale(c, a: RatVec) -> RatVec:
    c = Fraction(c)
    return tuple(c * x for x in a)


def neg(a: RatVec) -> RatVec:
    return tuple(-x for x in a)


def dot(a: Sequence, b: Sequence) -> Fraction:
    return sum((x * y for x, y in zip(a, b)), Fraction(0))


def _leading_minors_positive(gram: Sequence[Sequence[Fraction]]) -> bool:
    # Exact Cholesky-style elimination: all pivots positive iff all leading minors are.
    a = [list(r) for r in gram]
    n = len(a)
    for k in range(n):
        if a[k][k] <= 0:
            return False
        for i in range(k + 1, n):
            f = a[i][k] / a[k][k]
            for j in range(k, n):
                a[i][j] -= f * a[k][j]
    return True


@dataclass(frozen=True)
class InnerProductForm:
    """Positive definite symmetric bilinear form given by its Gram matrix.

    Integral Gram matrices describe the pairing on the cocharacter lattice;
    the dual pairing on characters (the inverse Gram matrix) is generally
    rational, so rational entries are accepted here too.
    """

    gram: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self):
        g = tuple(tuple(Fraction(x) for x in row) for row in self.gram)
        object.__setattr__(self, "gram", g)
        n = len(g)
        if n == 0 or any(len(row) != n for row in g):
            raise ValueError("Gram matrix must be square and nonempty")
        if any(g[i][j] != g[j][i] for i in range(n) for j in range(n)):
            raise ValueError("Gram matrix must be symmetric")
        if not _leading_minors_positive(g):
            raise ValueError("Gram matrix must be positive definite")

    @classmethod
    def identity(cls, rank: int) -> InnerProductForm:
        return cls(tuple(tuple(Fraction(int(i == j)) for j in range(rank)) for i in range(rank)))

    @property
    def rank(self) -> int:
        return len(self.gram)

    @property
    def integral(self) -> bool:
        return all(x.denominator == 1 for row in self.gram for x in row)

    def flat(self, tau: Sequence) -> RatVec:
        """Gram matrix applied to a vector (cocharacter to character)."""
        self._check(tau)
        return tuple(dot(row, tau) for row in self.gram)

    def pair(self, a: Sequence, b: Sequence) -> Fraction:
        return dot(a, self.flat(b))

    def sq(self, a: Sequence) -> Fraction:
        return self.pair(a, a)

    def dual(self) -> InnerProductForm:
        return InnerProductForm(tuple(tuple(r) for r in _linalg.inverse(self.gram)))

    def sharp(self, chi: Sequence) -> RatVec:
        """Inverse of flat."""
        self._check(chi)
        return tuple(dot(row, chi) for row in _linalg.inverse(self.gram))

    def as_array(self) -> np.ndarray:
        return np.array([[float(x) for x in row] for row in self.gram])

    def _check(self, v):
        if len(v) != self.rank:
            raise DimensionError(f"vector of length {len(v)} for a rank-{self.rank} form")


def _dedupe(vectors: Iterable[RatVec]) -> tuple[RatVec, ...]:
    out: dict[RatVec, None] = {}
    for v in vectors:
        out.setdefault(v, None)
    return tuple(out)


@dataclass(frozen=True)
class VPolyhedron:
    """conv(points) + cone(rays); empty exactly when there are no points."""

    rank: int
    points: tuple[RatVec, ...] = ()
    rays: tuple[RatVec, ...] = ()

    def __post_init__(self):
        pts = _dedupe(ratvec(p) for p in self.points)
        rays = _dedupe(r for r in (ratvec(r) for r in self.rays) if any(r))
        for v in pts + rays:
            if len(v) != self.rank:
                raise DimensionError(f"generator {v} does not have length {self.rank}")
        if not pts:
            rays = ()
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "rays", rays)

    @classmethod
    def empty(cls, rank: int) -> VPolyhedron:
        return cls(rank)

    @classmethod
    def cone(cls, rays: Iterable[Sequence], rank: int) -> VPolyhedron:
        return cls(rank, (zero(rank),), tuple(ratvec(r) for r in rays))

    @property
    def is_empty(self) -> bool:
        return not self.points

    def negate(self) -> VPolyhedron:
        return VPolyhedron(self.rank, tuple(map(neg, self.points)), tuple(map(neg, self.rays)))

    def __str__(self) -> str:
        def fmt(vs):
            return "{" + ", ".join("(" + ",".join(map(str, v)) + ")" for v in vs) + "}"

        if self.is_empty:
            return f"empty(rank={self.rank})"
        s = f"conv{fmt(self.points)}"
        return s + (f" + cone{fmt(self.rays)}" if self.rays else "")


def _same_rank(*objs):
    ranks = {len(o) if isinstance(o, tuple) else o.rank for o in objs}
    if len(ranks) != 1:
        raise DimensionError(f"rank mismatch: {sorted(ranks)}")


def contains(p: VPolyhedron, q: Sequence) -> bool:
    """Exact membership via LP feasibility of the convex/conic coefficients."""
    q = ratvec(q)
    _same_rank(p, q)
    if p.is_empty:
        return False
    npts, nrays = len(p.points), len(p.rays)
    gens = list(p.points) + list(p.rays)
    a = [[g[i] for g in gens] for i in range(p.rank)]
    a.append([Fraction(1)] * npts + [Fraction(0)] * nrays)
    return feasible_point(a, list(q) + [Fraction(1)]) is not None


def in_recession_cone(p: VPolyhedron, r: Sequence) -> bool:
    """Whether the direction r lies in cone(P.rays)."""
    r = ratvec(r)
    _same_rank(p, r)
    if not any(r):
        return True
    if not p.rays:
        return False
    a = [[g[i] for g in p.rays] for i in range(p.rank)]
    return feasible_point(a, list(r)) is not None


def set_equal(p: VPolyhedron, q: VPolyhedron) -> bool:
    """Set equality by mutual generator containment."""
    _same_rank(p, q)
    if p.is_empty or q.is_empty:
        return p.is_empty and q.is_empty
    return _subset(p, q) and _subset(q, p)


def _subset(p: VPolyhedron, q: VPolyhedron) -> bool:
    return all(contains(q, x) for x in p.points) and all(in_recession_cone(q, r) for r in p.rays)


def is_subset(p: VPolyhedron, q: VPolyhedron) -> bool:
    _same_rank(p, q)
    if p.is_empty:
        return True
    return not q.is_empty and _subset(p, q)


def minkowski_sum(p: VPolyhedron, q: VPolyhedron) -> VPolyhedron:
    _same_rank(p, q)
    points = tuple(add(a, b) for a in p.points for b in q.points)
    return VPolyhedron(p.rank, points, p.rays + q.rays)


# ---------------------------------------------------------------- min-norm point


def _flat_projection(points: Sequence[RatVec], rays: Sequence[RatVec], gram):
    """Projection of the origin onto aff(points) + span(rays).

    Returns (y, point coefficients, ray coefficients), or None when the lifted
    generators are linearly dependent.
    """
    p0 = points[0]
    dirs = [sub(p, p0) for p in points[1:]] + list(rays)
    if not dirs:
        return p0, [Fraction(1)], []
    gd = [tuple(dot(row, d) for row in gram) for d in dirs]
    normal = [[dot(di, gdj) for gdj in gd] for di in dirs]
    rhs = [-dot(p0, gdj) for gdj in gd]
    c = _linalg.solve(normal, rhs)
    if c is None:
        return None
    y = p0
    for ck, d in zip(c, dirs):
        y = add(y, scale(ck, d))
    k = len(points) - 1
    alpha = [1 - sum(c[:k], Fraction(0))] + list(c[:k])
    return y, alpha, list(c[k:])


def kkt_certified(p: VPolyhedron, y: RatVec, form: InnerProductForm) -> bool:
    """Optimality certificate for y in P: <y, g> >= <y, y> on points, >= 0 on rays."""
    d = form.sq(y)
    gy = form.flat(y)
    return all(dot(gy, g) >= d for g in p.points) and all(dot(gy, r) >= 0 for r in p.rays)


def _guess_support(p: VPolyhedron, form: InnerProductForm):
    """Floating-point guess of the active generators, used only to order the exact search."""
    gram = form.as_array()
    chol = np.linalg.cholesky(gram)
    pts = np.array([[float(x) for x in v] for v in p.points]).T
    rays = np.array([[float(x) for x in v] for v in p.rays]).reshape(-1, p.rank).T
    gens = np.hstack([pts, rays]) if p.rays else pts
    mat = chol.T @ gens
    w = 1e3 * (1 + np.abs(mat).max())
    npts = len(p.points)
    row = np.concatenate([np.full(npts, w), np.zeros(len(p.rays))])
    coef, _ = nnls(np.vstack([mat, row]), np.concatenate([np.zeros(p.rank), [w]]))
    cut = 1e-9 * max(coef.max(), 1e-300)
    sel = [i for i, c in enumerate(coef) if c > cut]
    return [i for i in sel if i < npts], [i - npts for i in sel if i >= npts]


def min_norm_point(p: VPolyhedron, form: InnerProductForm) -> tuple[RatVec, Fraction]:
    """Exact form-orthogonal projection of the origin onto P and its squared norm."""
    if form.rank != p.rank:
        raise DimensionError(f"form of rank {form.rank} for a rank-{p.rank} polyhedron")
    if p.is_empty:
        raise EmptyInputError("min-norm point of an empty polyhedron")
    ngen = len(p.points) + len(p.rays)
    if ngen > MAX_GENERATORS:
        raise UnsupportedDimensionError(f"{ngen} generators exceed the cap of {MAX_GENERATORS}")
    origin = zero(p.rank)
    if contains(p, origin):
        return origin, Fraction(0)

    def attempt(pi, ri):
        sol = _flat_projection([p.points[i] for i in pi], [p.rays[j] for j in ri], form.gram)
        if sol is None:
            return None
        y, alpha, beta = sol
        if min(alpha, default=0) < 0 or min(beta, default=0) < 0:
            return None
        return y if kkt_certified(p, y, form) else None

    try:
        guess = _guess_support(p, form)
    except (np.linalg.LinAlgError, ValueError, RuntimeError):
        guess = None
    if guess and guess[0]:
        y = attempt(*guess)
        if y is not None:
            return y, form.sq(y)

    npts, nrays = len(p.points), len(p.rays)
    for size in range(1, p.rank + 2):
        for k in range(max(1, size - nrays), min(size, npts) + 1):
            for pi in combinations(range(npts), k):
                for ri in combinations(range(nrays), size - k):
                    y = attempt(pi, ri)
                    if y is not None:
                        return y, form.sq(y)
    raise ArithmeticError("no certified min-norm point found")  # unreachable by Caratheodory


# ---------------------------------------------------------------- H/V conversion

HalfSpace = tuple[RatVec, Fraction]  # (a, b) meaning a . x + b >= 0


def to_halfspaces(p: VPolyhedron) -> list[HalfSpace]:
    """Inequality description obtained from the dual of the homogenized cone."""
    r = p.rank
    if r + 1 > MAX_DD_RANK + 1:
        raise UnsupportedDimensionError(f"rank {r} exceeds the cap of {MAX_DD_RANK}")
    if p.is_empty:
        return [(zero(r), Fraction(-1))]
    gens = [tuple(x) + (Fraction(1),) for x in p.points] + [tuple(x) + (Fraction(0),) for x in p.rays]
    rays, lines = cone_generators(gens, r + 1)
    normals = [tuple(map(Fraction, y)) for y in rays]
    for line in lines:
        normals.append(tuple(map(Fraction, line)))
        normals.append(tuple(-Fraction(c) for c in line))
    return [(y[:r], y[r]) for y in normals]


def from_halfspaces(rank: int, halfspaces: Sequence[HalfSpace]) -> VPolyhedron:
    """Generators of {x : a . x + b >= 0 for all (a, b)}."""
    if rank > MAX_DD_RANK:
        raise UnsupportedDimensionError(f"rank {rank} exceeds the cap of {MAX_DD_RANK}")
    rows = [tuple(a) + (Fraction(b),) for a, b in halfspaces]
    rows.append(zero(rank) + (Fraction(1),))
    rays, lines = cone_generators(rows, rank + 1)
    points, directions = [], []
    for y in rays:
        t = y[rank]
        if t > 0:
            points.append(tuple(Fraction(c, t) for c in y[:rank]))
        else:
            directions.append(ratvec(y[:rank]))
    for line in lines:
        directions.append(ratvec(line[:rank]))
        directions.append(ratvec(-c for c in line[:rank]))
    return VPolyhedron(rank, tuple(points), tuple(directions))


def intersect(p: VPolyhedron, q: VPolyhedron) -> VPolyhedron:
    _same_rank(p, q)
    if p.rank > MAX_DD_RANK:
        raise UnsupportedDimensionError(f"rank {p.rank} exceeds the cap of {MAX_DD_RANK}")
    if p.is_empty or q.is_empty:
        return VPolyhedron.empty(p.rank)
    return from_halfspaces(p.rank, to_halfspaces(p) + to_halfspaces(q))


def recession_rays(p: VPolyhedron) -> VPolyhedron:
    """The recession cone with redundant rays removed."""
    if p.is_empty:
        return VPolyhedron.empty(p.rank)
    rays = list(_dedupe(ratvec(_linalg.primitive(r)) for r in p.rays))
    i = 0
    while i < len(rays):
        others = VPolyhedron.cone(rays[:i] + rays[i + 1 :], p.rank)
        if in_recession_cone(others, rays[i]):
            del rays[i]
        else:
            i += 1
    return VPolyhedron.cone(rays, p.rank)


# ---------------------------------------------------------------- JSON


def rational_to_str(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def rational_from_json(s) -> Fraction:
    if isinstance(s, bool) or not isinstance(s, (str, int)):
        raise ValueError(f"expected a rational string or integer, got {s!r}")
    return Fraction(s)


def vec_to_json(v: Sequence[Fraction]) -> list[str]:
    return [rational_to_str(Fraction(x)) for x in v]


def vec_from_json(v) -> RatVec:
    if not isinstance(v, list):
        raise ValueError(f"expected a list of rationals, got {v!r}")
    return tuple(rational_from_json(x) for x in v)


def polyhedron_to_json(p: VPolyhedron) -> dict:
    return {
        "rank": p.rank,
        "points": [vec_to_json(v) for v in p.points],
        "rays": [vec_to_json(v) for v in p.rays],
    }


def polyhedron_from_json(d: dict) -> VPolyhedron:
    return VPolyhedron(
        int(d["rank"]),
        tuple(vec_from_json(v) for v in d.get("points", [])),
        tuple(vec_from_json(v) for v in d.get("rays", [])),
    )


def form_to_json(form: InnerProductForm) -> list[list[str]]:
    return [vec_to_json(row) for row in form.gram]


def form_from_json(rows) -> InnerProductForm:
    return InnerProductForm(tuple(vec_from_json(r) for r in rows))
