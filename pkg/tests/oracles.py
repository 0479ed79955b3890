"""Independent reference implementations used only by the test-suite.

Nothing here imports the algorithms it checks; where membership is needed it
goes through scipy's floating LP with an exact rational re-check of the
candidate coefficients.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import chain, combinations, product

import numpy as np
from scipy.optimize import linprog


def _dot(a, b, gram):
    return sum(a[i] * gram[i][j] * b[j] for i in range(len(a)) for j in range(len(b)))


def project_onto_flat(base, dirs, gram):
    """Form-orthogonal projection of the origin onto base + span(dirs) by Gram-Schmidt."""
    ortho = []
    for d in dirs:
        w = list(d)
        for u, uu in ortho:
            c = _dot(w, u, gram) / uu
            w = [a - c * b for a, b in zip(w, u)]
        nn = _dot(w, w, gram)
        if nn != 0:
            ortho.append((w, nn))
    y = list(base)
    for u, uu in ortho:
        c = _dot(y, u, gram) / uu
        y = [a - c * b for a, b in zip(y, u)]
    return tuple(Fraction(a) for a in y)


def float_member(points, rays, q, tol=1e-9):
    """Membership of q in conv(points) + cone(rays) via a floating-point LP."""
    if not points:
        return False
    r = len(q)
    gens = np.array([[float(x) for x in g] for g in list(points) + list(rays)]).T.reshape(r, -1)
    a_eq = np.vstack([gens, np.r_[np.ones(len(points)), np.zeros(len(rays))]])
    b_eq = np.r_[[float(x) for x in q], 1.0]
    res = linprog(np.zeros(a_eq.shape[1]), A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    if res.status != 0:
        return False
    return np.abs(a_eq @ res.x - b_eq).max() < tol


def facewise_min_norm(points, rays, gram):
    """Minimum of the form norm over P, taken face by face over every generator subset.

    Returns (argmin, sqnorm). Candidate projections that fall outside P are
    discarded using a floating LP; ties of the exact minimum are impossible by
    strict convexity, so the smallest feasible candidate is the answer.
    """
    best = None
    pts = list(points)
    rys = list(rays)
    for k in range(1, len(pts) + 1):
        for ps in combinations(pts, k):
            for rs in chain.from_iterable(combinations(rys, j) for j in range(len(rys) + 1)):
                dirs = [tuple(a - b for a, b in zip(p, ps[0])) for p in ps[1:]] + list(rs)
                y = project_onto_flat(ps[0], dirs, gram)
                nrm = _dot(y, y, gram)
                if best is not None and nrm >= best[1]:
                    continue
                if float_member(pts, rys, y):
                    best = (y, nrm)
    return best


def rational_grid(rank, max_den=6, bound=1):
    """All vectors with coordinates p/q, |p| <= bound*q, q <= max_den."""
    vals = sorted({Fraction(p, q) for q in range(1, max_den + 1) for p in range(-bound * q, bound * q + 1)})
    return [tuple(v) for v in product(vals, repeat=rank)]


def inverse_gram(gram):
    """Exact inverse by Gauss-Jordan on a copy (kept separate from the package's algebra)."""
    n = len(gram)
    a = [[Fraction(gram[i][j]) for j in range(n)] + [Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    for c in range(n):
        p = next(i for i in range(c, n) if a[i][c] != 0)
        a[c], a[p] = a[p], a[c]
        piv = a[c][c]
        a[c] = [x / piv for x in a[c]]
        for i in range(n):
            if i != c and a[i][c] != 0:
                f = a[i][c]
                a[i] = [x - f * y for x, y in zip(a[i], a[c])]
    return [row[n:] for row in a]


def _matvec(m, v):
    return tuple(sum(Fraction(m[i][j]) * v[j] for j in range(len(v))) for i in range(len(m)))


def support_subset_candidates(sup_e, sup_v, gram):
    """Candidate optimal directions: minus the dual-form projections of the origin
    onto the flats spanned by every support sub-pattern."""
    ginv = inverse_gram(gram)
    cands = set()
    for k in range(1, len(sup_e) + 1):
        for ps in combinations(sup_e, k):
            for rs in chain.from_iterable(combinations(sup_v, j) for j in range(len(sup_v) + 1)):
                dirs = [tuple(a - b for a, b in zip(p, ps[0])) for p in ps[1:]] + list(rs)
                y = project_onto_flat(ps[0], dirs, ginv)
                if any(y):
                    cands.add(tuple(-c for c in _matvec(ginv, y)))
    return cands


def hilbert_mumford(sup_e, sup_v, gram, max_den=6):
    """Brute-force Hilbert-Mumford search.

    Scans a rational grid of directions plus the support-subset candidates and
    returns (grid_unstable, candidate_unstable, best_Msq, best_tau) where
    best_tau is the candidate of maximal normalized degree rescaled so that
    degree == ||tau||^2.
    """
    rank = len(gram)
    we = np.array([[int(c) for c in w] for w in sup_e], dtype=np.int64)
    wv = np.array([[int(c) for c in w] for w in sup_v], dtype=np.int64).reshape(-1, rank)
    vals = sorted({Fraction(p, q) for q in range(1, max_den + 1) for p in range(-q, q + 1)})
    scaled = np.array([int(v * 60) for v in vals], dtype=np.int64)
    grid = np.array(np.meshgrid(*[scaled] * rank, indexing="ij")).reshape(rank, -1).T
    grid = grid[np.any(grid != 0, axis=1)]
    top = (we @ grid.T).max(axis=0)
    ok_v = np.all((wv @ grid.T) <= 0, axis=0) if len(sup_v) else np.ones(len(grid), bool)
    grid_unstable = bool(np.any((top < 0) & ok_v))

    best = (Fraction(0), None)
    for tau in support_subset_candidates(sup_e, sup_v, gram):
        if any(sum(w[i] * tau[i] for i in range(rank)) > 0 for w in sup_v):
            continue
        deg = -max(sum(w[i] * tau[i] for i in range(rank)) for w in sup_e)
        if deg <= 0:
            continue
        nrm = sum(tau[i] * Fraction(gram[i][j]) * tau[j] for i in range(rank) for j in range(rank))
        val = deg * deg / nrm
        if val > best[0]:
            best = (val, tuple(deg / nrm * c for c in tau))
    return grid_unstable, best[1] is not None, best[0], best[1]
