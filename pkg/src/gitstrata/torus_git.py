"""Exact GIT for a torus acting on V x P(E).

Only the supports of a point enter the verdicts; complex coefficients are kept
so that limits and the numerical layer have concrete points to work with.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Mapping, Sequence

from .ratgeom import (
    InnerProductForm,
    RatVec,
    VPolyhedron,
    contains,
    dot,
    min_norm_point,
    neg,
    ratvec,
    zero,
)

NEG_INFINITY = float("-inf")
MAX_STRATA_WEIGHTS = 12


class InvalidPointError(ValueError):
    """A point does not fit its representation or has m = 0."""


class InvalidDirectionError(ValueError):
    """A one-parameter subgroup direction is zero or of the wrong length."""


class Status(enum.Enum):
    SEMISTABLE = "Semistable"
    UNSTABLE = "Unstable"
    VSTABLE = "VStable"


SEMISTABLE = Status.SEMISTABLE


@dataclass(frozen=True)
class RepSpec:
    """Weight data of E and V for a rank-r torus, with multiplicities."""

    rank: int
    weightsE: tuple[tuple[RatVec, int], ...]
    weightsV: tuple[tuple[RatVec, int], ...] = ()
    form: InnerProductForm | None = None

    def __post_init__(self):
        if self.rank < 1:
            raise ValueError("rank must be positive")
        norm = []
        for name in ("weightsE", "weightsV"):
            entries = []
            for entry in getattr(self, name):
                w, mult = entry if _is_weight_entry(entry) else (entry, 1)
                w = ratvec(w)
                if len(w) != self.rank:
                    raise ValueError(f"{name} weight {w} does not have length {self.rank}")
                if any(c.denominator != 1 for c in w):
                    raise ValueError(f"{name} weight {w} is not integral")
                if int(mult) < 1:
                    raise ValueError(f"{name} multiplicity must be at least 1")
                entries.append((w, int(mult)))
            norm.append(tuple(entries))
        if not norm[0]:
            raise ValueError("weightsE must be nonempty")
        object.__setattr__(self, "weightsE", norm[0])
        object.__setattr__(self, "weightsV", norm[1])
        form = self.form if self.form is not None else InnerProductForm.identity(self.rank)
        if form.rank != self.rank:
            raise ValueError("form rank differs from the torus rank")
        object.__setattr__(self, "form", form)

    @property
    def slotsE(self) -> tuple[RatVec, ...]:
        """Weight of each E coordinate, multiplicities expanded."""
        return tuple(w for w, k in self.weightsE for _ in range(k))

    @property
    def slotsV(self) -> tuple[RatVec, ...]:
        return tuple(w for w, k in self.weightsV for _ in range(k))

    @property
    def dimE(self) -> int:
        return len(self.slotsE)

    @property
    def dimV(self) -> int:
        return len(self.slotsV)


def _is_weight_entry(entry) -> bool:
    return (
        isinstance(entry, tuple)
        and len(entry) == 2
        and isinstance(entry[1], int)
        and isinstance(entry[0], (tuple, list))
    )


@dataclass(frozen=True)
class TorusPoint:
    """Coefficients of (v, m) in the weight basis, one per slot."""

    coeffsE: tuple[complex, ...]
    coeffsV: tuple[complex, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "coeffsE", tuple(complex(c) for c in self.coeffsE))
        object.__setattr__(self, "coeffsV", tuple(complex(c) for c in self.coeffsV))

    @classmethod
    def sparse(cls, spec: RepSpec, E: Mapping[int, complex], V: Mapping[int, complex] | None = None):
        e = [0j] * spec.dimE
        v = [0j] * spec.dimV
        for slot, c in E.items():
            e[slot] = c
        for slot, c in (V or {}).items():
            v[slot] = c
        return cls(tuple(e), tuple(v))


@dataclass(frozen=True)
class Verdict:
    status: Status
    Msq: Fraction | None = None
    tau_x: RatVec | None = None

    def __post_init__(self):
        unstable = self.status is Status.UNSTABLE
        if unstable != (self.Msq is not None) or unstable != (self.tau_x is not None):
            raise ValueError("Msq and tau_x are present exactly for unstable verdicts")
        if unstable and (self.Msq <= 0 or not any(self.tau_x)):
            raise ValueError("unstable verdicts carry Msq > 0 and a nonzero tau_x")


@dataclass(frozen=True)
class Stratum:
    """A realized stratum label with a support pattern that exhibits it."""

    label: RatVec | Status
    Msq: Fraction
    support_E: tuple[RatVec, ...] = field(default=())
    support_V: tuple[RatVec, ...] = field(default=())


# ---------------------------------------------------------------- supports


def check_point(spec: RepSpec, x: TorusPoint) -> None:
    if len(x.coeffsE) != spec.dimE or len(x.coeffsV) != spec.dimV:
        raise InvalidPointError(
            f"point has {len(x.coeffsE)} E / {len(x.coeffsV)} V coefficients, "
            f"representation has {spec.dimE} / {spec.dimV} slots"
        )
    if not any(x.coeffsE):
        raise InvalidPointError("the E component is identically zero")


def _support(slots: Sequence[RatVec], coeffs: Sequence[complex]) -> tuple[RatVec, ...]:
    out: dict[RatVec, None] = {}
    for w, c in zip(slots, coeffs):
        if c != 0:
            out.setdefault(w, None)
    return tuple(out)


def support_E(spec: RepSpec, x: TorusPoint) -> tuple[RatVec, ...]:
    check_point(spec, x)
    return _support(spec.slotsE, x.coeffsE)


def support_V(spec: RepSpec, x: TorusPoint) -> tuple[RatVec, ...]:
    check_point(spec, x)
    return _support(spec.slotsV, x.coeffsV)


def weight_polyhedron(spec: RepSpec, x: TorusPoint) -> VPolyhedron:
    """conv of the E-support weights plus cone of the V-support weights."""
    return VPolyhedron(spec.rank, support_E(spec, x), support_V(spec, x))


def moment_polyhedron_T(spec: RepSpec, x: TorusPoint) -> VPolyhedron:
    return weight_polyhedron(spec, x).negate()


# ---------------------------------------------------------------- instability degrees


def _direction(spec: RepSpec, tau) -> RatVec:
    tau = ratvec(tau)
    if len(tau) != spec.rank:
        raise InvalidDirectionError(f"direction of length {len(tau)} for rank {spec.rank}")
    if not any(tau):
        raise InvalidDirectionError("zero direction")
    return tau


def varpi_E(spec: RepSpec, x: TorusPoint, tau) -> Fraction:
    """-max <chi, tau> over the E-support."""
    tau = ratvec(tau)
    return -max(dot(w, tau) for w in support_E(spec, x))


def varpi_rel(spec: RepSpec, x: TorusPoint, tau) -> Fraction | float:
    """varpi_E, or NEG_INFINITY when the V-limit along tau does not exist."""
    tau = _direction(spec, tau)
    if any(dot(w, tau) > 0 for w in support_V(spec, x)):
        return NEG_INFINITY
    return varpi_E(spec, x, tau)


def varpi_rel_normalized(spec: RepSpec, x: TorusPoint, tau) -> tuple[Fraction | float, Fraction]:
    """The normalized degree as the exact pair (value, ||tau||^2); the real
    normalized value is value / sqrt(||tau||^2)."""
    tau = _direction(spec, tau)
    return varpi_rel(spec, x, tau), spec.form.sq(tau)


# ---------------------------------------------------------------- verdicts


def is_vstable(spec: RepSpec, x: TorusPoint) -> bool:
    """Whether the V-support weights positively span the whole weight space."""
    rays = support_V(spec, x)
    if not rays:
        return False
    cone = VPolyhedron.cone(rays, spec.rank)
    for i in range(spec.rank):
        e = tuple(Fraction(int(i == j)) for j in range(spec.rank))
        if not (contains(cone, e) and contains(cone, neg(e))):
            return False
    return True


def analyze(spec: RepSpec, x: TorusPoint) -> Verdict:
    poly = weight_polyhedron(spec, x)
    if is_vstable(spec, x):
        return Verdict(Status.VSTABLE)
    if contains(poly, zero(spec.rank)):
        return Verdict(Status.SEMISTABLE)
    y, sq = min_norm_point(poly, spec.form.dual())
    tau = neg(spec.form.sharp(y))
    return Verdict(Status.UNSTABLE, sq, tau)


def limit(spec: RepSpec, x: TorusPoint, tau) -> TorusPoint | None:
    """lim tau(t).x as t -> infinity in V x P(E); None when the V-limit diverges."""
    tau = _direction(spec, tau)
    check_point(spec, x)
    pv = [dot(w, tau) for w in spec.slotsV]
    if any(p > 0 and c != 0 for p, c in zip(pv, x.coeffsV)):
        return None
    pe = [dot(w, tau) for w in spec.slotsE]
    top = max(p for p, c in zip(pe, x.coeffsE) if c != 0)
    v = tuple(c if p == 0 else 0j for p, c in zip(pv, x.coeffsV))
    m = tuple(c if p == top else 0j for p, c in zip(pe, x.coeffsE))
    return TorusPoint(m, v)


def stratum_label(spec: RepSpec, x: TorusPoint) -> RatVec | Status:
    verdict = analyze(spec, x)
    return verdict.tau_x if verdict.status is Status.UNSTABLE else SEMISTABLE


# ---------------------------------------------------------------- strata


def point_with_support(spec: RepSpec, sup_e: Iterable[RatVec], sup_v: Iterable[RatVec] = ()) -> TorusPoint:
    """A point with coefficient 1 on the first slot of each listed weight."""
    sup_e, sup_v = set(map(ratvec, sup_e)), set(map(ratvec, sup_v))
    e = _first_slots(spec.slotsE, sup_e)
    v = _first_slots(spec.slotsV, sup_v)
    return TorusPoint(e, v)


def _first_slots(slots, wanted) -> tuple[complex, ...]:
    out, seen = [], set()
    for w in slots:
        hit = w in wanted and w not in seen
        seen.add(w)
        out.append(1 + 0j if hit else 0j)
    missing = wanted - seen
    if missing:
        raise InvalidPointError(f"weights {sorted(missing)} are not in the representation")
    return tuple(out)


def exposed_face(spec: RepSpec, poly: VPolyhedron, tau: RatVec) -> tuple[tuple[RatVec, ...], tuple[RatVec, ...]]:
    """Generators of P_T where <., tau> is maximal (points) or zero (rays)."""
    top = max(dot(p, tau) for p in poly.points)
    return (
        tuple(p for p in poly.points if dot(p, tau) == top),
        tuple(r for r in poly.rays if dot(r, tau) == 0),
    )


def enumerate_strata(spec: RepSpec) -> list[Stratum]:
    """Every stratum label realized by some support pattern, with a witness.

    The witness is the face pattern of the label: the E-weights where
    <chi, tau> attains -||tau||^2 and the V-weights orthogonal to tau.
    """
    dist_e = tuple(dict.fromkeys(w for w, _ in spec.weightsE))
    dist_v = tuple(dict.fromkeys(w for w, _ in spec.weightsV if any(w)))
    if len(dist_e) + len(dist_v) > MAX_STRATA_WEIGHTS:
        raise ValueError(
            f"{len(dist_e) + len(dist_v)} distinct weights exceed the enumeration cap {MAX_STRATA_WEIGHTS}"
        )
    found: dict = {}
    for ke in range(1, len(dist_e) + 1):
        for se in combinations(dist_e, ke):
            for kv in range(len(dist_v) + 1):
                for sv in combinations(dist_v, kv):
                    poly = VPolyhedron(spec.rank, se, sv)
                    if contains(poly, zero(spec.rank)):
                        found.setdefault(SEMISTABLE, Stratum(SEMISTABLE, Fraction(0), se, sv))
                        continue
                    y, sq = min_norm_point(poly, spec.form.dual())
                    tau = neg(spec.form.sharp(y))
                    if tau not in found:
                        fe, fv = exposed_face(spec, poly, tau)
                        found[tau] = Stratum(tau, sq, fe, fv)
    return sorted(found.values(), key=lambda s: (s.Msq, str(s.label)))
