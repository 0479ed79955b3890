"""Seeded generators of random instances."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.linalg import expm

from ..kahler import HermitianRep, SU2Module
from ..ratgeom import InnerProductForm
from ..torus_git import RepSpec, TorusPoint


@dataclass(frozen=True)
class TorusInstance:
    name: str
    spec: RepSpec
    point: TorusPoint


@dataclass(frozen=True)
class InstanceFamily:
    """Parameters of a random torus family; the seed determines every instance."""

    count: int
    seed: int = 0
    max_rank: int = 3
    weight_bound: int = 4
    max_E: int = 6
    max_V: int = 4
    support_prob: float = 0.7
    random_forms: bool = True
    multiplicity_prob: float = 0.1

    def instances(self) -> list[TorusInstance]:
        rng = np.random.default_rng(self.seed)
        return [self._draw(rng, i) for i in range(self.count)]

    def _draw(self, rng, index) -> TorusInstance:
        r = int(rng.integers(1, self.max_rank + 1))
        form = random_form(rng, r) if self.random_forms and rng.random() < 0.5 else InnerProductForm.identity(r)
        n_e = int(rng.integers(1, self.max_E + 1))
        n_v = int(rng.integers(0, self.max_V + 1))
        b = self.weight_bound

        def entries(n):
            out = []
            for _ in range(n):
                w = tuple(int(c) for c in rng.integers(-b, b + 1, size=r))
                mult = 2 if rng.random() < self.multiplicity_prob else 1
                out.append((w, mult))
            return tuple(out)

        spec = RepSpec(r, entries(n_e), entries(n_v), form)
        while True:
            e = _coefficients(rng, spec.dimE, self.support_prob)
            if any(e):
                break
        v = _coefficients(rng, spec.dimV, self.support_prob)
        return TorusInstance(f"torus-{self.seed}-{index}", spec, TorusPoint(e, v))


def _coefficients(rng, n, prob) -> tuple[complex, ...]:
    vals = rng.normal(size=n) + 1j * rng.normal(size=n)
    keep = rng.random(n) < prob
    return tuple(complex(c) if k else 0j for c, k in zip(vals, keep))


def random_form(rng, r) -> InnerProductForm:
    """Small integral positive definite Gram matrix."""
    while True:
        g = np.diag(rng.integers(1, 4, size=r)).astype(int)
        for i in range(r):
            for j in range(i):
                g[i, j] = g[j, i] = int(rng.integers(-1, 2))
        try:
            return InnerProductForm(tuple(tuple(Fraction(int(x)) for x in row) for row in g))
        except ValueError:
            continue


@dataclass(frozen=True)
class SL2Instance:
    """A point of V x P(E) for SL2 with E, V direct sums of irreducibles.

    Coefficients refer to the weight basis of each summand (weights n, n-2, ..., -n).
    For rotated critical points, `base` is the torus point before the rotation
    `rotation` (coefficients of a unit-free element of su(2)) was applied.
    """

    name: str
    E: tuple[int, ...]
    V: tuple[int, ...]
    m: tuple[complex, ...]
    v: tuple[complex, ...] = ()
    base: TorusPoint | None = None
    rotation: tuple[float, float, float] | None = None

    def rep(self) -> HermitianRep:
        return HermitianRep.from_su2(SU2Module.from_irreps(self.E), SU2Module.from_irreps(self.V))

    def state(self):
        return self.rep().point(np.array(self.v, dtype=complex), np.array(self.m, dtype=complex))

    def torus_point(self) -> TorusPoint:
        return TorusPoint(self.m, self.v)


def _irreps(rng, max_dim, min_dim=0) -> tuple[int, ...]:
    out, dim = [], 0
    while True:
        n = int(rng.integers(0, max_dim))
        if dim + n + 1 > max_dim:
            break
        out.append(n)
        dim += n + 1
        if dim >= min_dim and rng.random() < 0.4:
            break
    return tuple(out)


def _weights(hws) -> list[int]:
    return [n - 2 * k for n in hws for k in range(n + 1)]


@dataclass(frozen=True)
class SL2Family:
    """Seeded SL2 instances.

    kind "critical": a weight vector e_w (w != 0) of E, plus a vector in the
    zero-weight part of V, rotated by a random element of SU(2). These are
    critical points of |moment|^2, so their optimal destabilizer is known
    exactly from the torus data of the unrotated point.
    kind "generic": random coefficients, each slot kept with `support_prob`.
    """

    count: int
    seed: int = 0
    kind: str = "critical"
    max_dimE: int = 6
    max_dimV: int = 4
    support_prob: float = 1.0

    def instances(self) -> list[SL2Instance]:
        if self.kind not in ("critical", "generic"):
            raise ValueError(f"unknown SL2 family kind {self.kind!r}")
        rng = np.random.default_rng(self.seed)
        return [self._draw(rng, i) for i in range(self.count)]

    def _draw(self, rng, index) -> SL2Instance:
        name = f"sl2-{self.kind}-{self.seed}-{index}"
        while True:
            E = _irreps(rng, self.max_dimE, 1)
            if any(E):
                break
        V = _irreps(rng, self.max_dimV) if rng.random() < 0.6 else ()
        we, wv = _weights(E), _weights(V)
        if self.kind == "generic":
            while True:
                m = _coefficients(rng, len(we), self.support_prob)
                if any(m):
                    break
            return SL2Instance(name, E, V, m, _coefficients(rng, len(wv), self.support_prob))
        slots = [i for i, w in enumerate(we) if w != 0]
        base_m = [0j] * len(we)
        base_m[int(rng.choice(slots))] = 1 + 0j
        base_v = [complex(rng.normal(), rng.normal()) if w == 0 and rng.random() < 0.7 else 0j for w in wv]
        rot = tuple(float(a) for a in rng.normal(size=3))
        rep = HermitianRep.from_su2(SU2Module.from_irreps(E), SU2Module.from_irreps(V))
        av, ae = rep.action(np.array(rot))
        m = expm(ae) @ np.array(base_m)
        v = expm(av) @ np.array(base_v) if wv else np.zeros(0)
        return SL2Instance(
            name, E, V, tuple(complex(c) for c in m), tuple(complex(c) for c in v),
            TorusPoint(tuple(base_m), tuple(base_v)), rot,
        )
