"""Concrete unitary representations used by the numerical layer.

An `SU2Module` carries the action of the orthonormal basis
X1 = diag(i, -i), X2 = [[0, 1], [-1, 0]], X3 = [[0, i], [i, 0]] of su(2)
(orthonormal for -tr/2) on an orthonormal weight basis, together with the
raising operator that generates the unipotent radical of the upper Borel.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations_with_replacement
from math import factorial, sqrt

import numpy as np

SU2_BASIS = (
    np.array([[1j, 0], [0, -1j]]),
    np.array([[0, 1], [-1, 0]], dtype=complex),
    np.array([[0, 1j], [1j, 0]]),
)
RAISING = np.array([[0, 1], [0, 0]], dtype=complex)


def multisets(n: int, ell: int) -> list[tuple[int, ...]]:
    """Index set of the monomial basis of Sym^ell of an n-dimensional space."""
    return list(combinations_with_replacement(range(n), ell))


def sym_scaling(n: int, ell: int) -> np.ndarray:
    """Monomial-to-orthonormal coordinate scaling sqrt(alpha!/ell!)."""
    out = []
    for idx in multisets(n, ell):
        counts = np.bincount(idx, minlength=n)
        out.append(sqrt(np.prod([factorial(int(c)) for c in counts]) / factorial(ell)))
    return np.array(out)


def sym_power_monomial(a: np.ndarray, ell: int) -> np.ndarray:
    """Derived action of a on Sym^ell in the monomial basis e^alpha."""
    n = a.shape[0]
    basis = multisets(n, ell)
    index = {b: i for i, b in enumerate(basis)}
    out = np.zeros((len(basis), len(basis)), dtype=complex)
    for col, mono in enumerate(basis):
        for pos, i in enumerate(mono):
            rest = mono[:pos] + mono[pos + 1 :]
            for j in range(n):
                if a[j, i] != 0:
                    out[index[tuple(sorted(rest + (j,)))], col] += a[j, i]
    return out


def sym_power(a: np.ndarray, ell: int) -> np.ndarray:
    """Derived action on Sym^ell in the orthonormal basis induced by the tensor norm."""
    dsc = sym_scaling(a.shape[0], ell)
    return (dsc[:, None] * sym_power_monomial(a, ell)) / dsc[None, :]


@dataclass(frozen=True)
class SU2Module:
    basis: tuple[np.ndarray, np.ndarray, np.ndarray]
    raising: np.ndarray

    @property
    def dim(self) -> int:
        return self.basis[0].shape[0]

    @property
    def weights(self) -> tuple[int, ...]:
        """Weights read off the diagonal action of X1 (which acts by i * weight)."""
        return tuple(int(round(w)) for w in np.diag(self.basis[0]).imag)

    @classmethod
    def irrep(cls, n: int) -> SU2Module:
        """Sym^n C^2, highest weight n, basis ordered by weights n, n-2, ..., -n."""
        if n == 0:
            z = np.zeros((1, 1), dtype=complex)
            return cls((z, z.copy(), z.copy()), z.copy())
        return cls(tuple(sym_power(x, n) for x in SU2_BASIS), sym_power(RAISING, n))

    @classmethod
    def zero(cls) -> SU2Module:
        z = np.zeros((0, 0), dtype=complex)
        return cls((z, z, z), z)

    def direct_sum(self, other: SU2Module) -> SU2Module:
        def bd(a, b):
            out = np.zeros((a.shape[0] + b.shape[0],) * 2, dtype=complex)
            out[: a.shape[0], : a.shape[0]] = a
            out[a.shape[0] :, a.shape[0] :] = b
            return out

        return SU2Module(tuple(bd(a, b) for a, b in zip(self.basis, other.basis)), bd(self.raising, other.raising))

    def tensor(self, other: SU2Module) -> SU2Module:
        ia, ib = np.eye(self.dim), np.eye(other.dim)

        def t(a, b):
            return np.kron(a, ib) + np.kron(ia, b)

        return SU2Module(tuple(t(a, b) for a, b in zip(self.basis, other.basis)), t(self.raising, other.raising))

    def sym(self, ell: int) -> SU2Module:
        return SU2Module(tuple(sym_power(a, ell) for a in self.basis), sym_power(self.raising, ell))

    @classmethod
    def from_irreps(cls, highest_weights) -> SU2Module:
        out = cls.zero()
        for n in highest_weights:
            out = out.direct_sum(cls.irrep(int(n)))
        return out
