"""Exact phase-one simplex: feasibility of {x >= 0 : A x = b} over the rationals."""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence


def feasible_point(a: Sequence[Sequence[Fraction]], b: Sequence[Fraction]) -> list[Fraction] | None:
    """Return some x >= 0 with a @ x == b, or None when no such x exists.

    Bland's rule keeps the pivoting finite; all arithmetic is exact.
    """
    m = len(a)
    n = len(a[0]) if m else 0
    if m == 0:
        return [Fraction(0)] * n
    # Tableau rows: [coefficients (n) | artificials (m) | rhs], rhs made nonnegative.
    rows = []
    for i in range(m):
        sgn = -1 if b[i] < 0 else 1
        row = [sgn * Fraction(v) for v in a[i]]
        row += [Fraction(int(k == i)) for k in range(m)]
        row.append(sgn * Fraction(b[i]))
        rows.append(row)
    basis = [n + i for i in range(m)]
    width = n + m
    # Reduced costs for minimizing the sum of artificials.
    cost = [Fraction(0)] * (width + 1)
    for row in rows:
        for j in range(n):
            cost[j] -= row[j]
        cost[width] -= row[width]

    while True:
        enter = next((j for j in range(width) if cost[j] < 0), None)
        if enter is None:
            break
        best = None
        leave = None
        for i, row in enumerate(rows):
            if row[enter] > 0:
                ratio = row[width] / row[enter]
                if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                    best, leave = ratio, i
        if leave is None:
            # Unbounded direction cannot occur for a sum of nonnegative artificials.
            raise ArithmeticError("phase-one simplex unbounded")
        _pivot(rows, cost, leave, enter)
        basis[leave] = enter

    if cost[width] != 0:
        return None
    x = [Fraction(0)] * n
    for i, j in enumerate(basis):
        if j < n:
            x[j] = rows[i][width]
    return x


def _pivot(rows, cost, r, c):
    pr = rows[r]
    inv = 1 / pr[c]
    rows[r] = pr = [v * inv for v in pr]
    for i, row in enumerate(rows):
        if i != r and row[c] != 0:
            f = row[c]
            rows[i] = [x - f * y for x, y in zip(row, pr)]
    if cost[c] != 0:
        f = cost[c]
        cost[:] = [x - f * y for x, y in zip(cost, pr)]
