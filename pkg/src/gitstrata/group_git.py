"""Root and Weyl data for tori, SL2 and their products; shifting constructions;
sampled U-weight polyhedra and the moment polyhedron of a B-orbit closure."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations_with_replacement, product
from math import factorial, gcd

import numpy as np
from scipy.linalg import expm
from scipy.stats import qmc

from .kahler.rep import Block, HermitianRep, StatePoint
from .ratgeom import (
    InnerProductForm,
    RatVec,
    VPolyhedron,
    from_halfspaces,
    intersect,
    ratvec,
    set_equal,
)
from .torus_git import RepSpec, TorusPoint, weight_polyhedron

SUPPORT_REL_TOL = 1e-10
DEFAULT_PARAM_BOX = 3.0
DEFAULT_RANDOM_DRAWS = 32
DEFAULT_STABLE_RUN = 8


class CorruptGroupSpecError(ValueError):
    """Weyl data are not a group, do not preserve the form, or admit no dominant translate."""


def _mat(rows) -> tuple[tuple[int, ...], ...]:
    return tuple(tuple(int(c) for c in row) for row in rows)


def _mul(a, b):
    n = len(a)
    return tuple(tuple(sum(a[i][k] * b[k][j] for k in range(n)) for j in range(n)) for i in range(n))


def _apply(w, xi) -> RatVec:
    return tuple(sum((Fraction(w[i][k]) * xi[k] for k in range(len(xi))), Fraction(0)) for i in range(len(w)))


@dataclass(frozen=True)
class GroupSpec:
    """Weyl group and positive roots acting on the character lattice of a maximal torus.

    `blocks` records the product structure (torus factors and SL2 factors) when
    the GroupSpec was built from the standard constructors; user-supplied specs may
    leave it empty.
    """

    rank: int
    positive_roots: tuple[RatVec, ...]
    weyl_elements: tuple[tuple[tuple[int, ...], ...], ...]
    form: InnerProductForm | None = None
    blocks: tuple[tuple[str, int], ...] = field(default=())

    def __post_init__(self):
        form = self.form or InnerProductForm.identity(self.rank)
        object.__setattr__(self, "form", form)
        roots = tuple(ratvec(r) for r in self.positive_roots)
        if any(len(r) != self.rank or not any(r) for r in roots):
            raise CorruptGroupSpecError("positive roots must be nonzero vectors of the torus rank")
        object.__setattr__(self, "positive_roots", roots)
        ws = tuple(_mat(w) for w in self.weyl_elements)
        if not ws:
            raise CorruptGroupSpecError("the Weyl group needs at least the identity")
        if any(len(w) != self.rank or any(len(row) != self.rank for row in w) for w in ws):
            raise CorruptGroupSpecError("Weyl elements must be rank x rank matrices")
        object.__setattr__(self, "weyl_elements", ws)
        members = set(ws)
        ident = _mat(np.eye(self.rank, dtype=int))
        if ident not in members:
            raise CorruptGroupSpecError("the Weyl group must contain the identity")
        # the Weyl group acts on characters, so it preserves the dual form
        dual = form.dual().gram
        for a in ws:
            if not any(_mul(a, b) == ident for b in ws):
                raise CorruptGroupSpecError("Weyl elements are not closed under inversion")
            for b in ws:
                if _mul(a, b) not in members:
                    raise CorruptGroupSpecError("Weyl elements are not closed under composition")
            at = tuple(zip(*a))
            if _mul(_mul(at, dual), a) != dual:
                raise CorruptGroupSpecError("a Weyl element does not preserve the form")

    # ---------------------------------------------------------------- constructors

    @classmethod
    def torus(cls, rank: int, form: InnerProductForm | None = None) -> GroupSpec:
        return cls(rank, (), (_mat(np.eye(rank, dtype=int)),), form, (("torus", rank),))

    @classmethod
    def sl2(cls) -> GroupSpec:
        return cls(1, ((Fraction(2),),), (((1,),), ((-1,),)), InnerProductForm.identity(1), (("su2", 1),))

    @classmethod
    def product(cls, *groups: GroupSpec) -> GroupSpec:
        rank = sum(g.rank for g in groups)
        roots, gram, off = [], [[Fraction(0)] * rank for _ in range(rank)], 0
        for g in groups:
            for r in g.positive_roots:
                roots.append((Fraction(0),) * off + r + (Fraction(0),) * (rank - off - g.rank))
            for i in range(g.rank):
                for j in range(g.rank):
                    gram[off + i][off + j] = g.form.gram[i][j]
            off += g.rank
        weyl = []
        for combo in product(*(g.weyl_elements for g in groups)):
            m = np.zeros((rank, rank), dtype=int)
            off = 0
            for g, w in zip(groups, combo):
                m[off : off + g.rank, off : off + g.rank] = np.array(w)
                off += g.rank
            weyl.append(_mat(m))
        blocks = tuple(b for g in groups for b in g.blocks)
        return cls(rank, tuple(roots), tuple(weyl), InnerProductForm(tuple(map(tuple, gram))), blocks)

    @classmethod
    def from_rep(cls, rep: HermitianRep) -> GroupSpec:
        parts = []
        for b in rep.blocks:
            parts.append(cls.torus(b.size, b.form) if b.kind == "torus" else cls.sl2())
        return parts[0] if len(parts) == 1 else cls.product(*parts)

    # ---------------------------------------------------------------- chamber

    def is_dominant(self, xi) -> bool:
        return all(sum(a * b for a, b in zip(alpha, xi)) >= 0 for alpha in self.positive_roots)

    def chamber(self) -> VPolyhedron:
        """The closed dominant chamber as a polyhedral cone."""
        return from_halfspaces(self.rank, [(alpha, Fraction(0)) for alpha in self.positive_roots])

    def chamber_halfspaces(self) -> list[tuple[RatVec, Fraction]]:
        return [(alpha, Fraction(0)) for alpha in self.positive_roots]


def dominant_representative(g: GroupSpec, xi) -> RatVec:
    xi = ratvec(xi)
    if len(xi) != g.rank:
        raise ValueError(f"vector of length {len(xi)} for a rank-{g.rank} group")
    for w in g.weyl_elements:
        cand = _apply(w, xi)
        if g.is_dominant(cand):
            return cand
    raise CorruptGroupSpecError(f"no Weyl translate of {xi} is dominant")


def tau_flat(g: GroupSpec, tau) -> tuple[int, RatVec]:
    """(ell, tau_flat): the character dual to tau and the least ell making ell * tau_flat integral."""
    tau = ratvec(tau)
    if not any(tau):
        raise ValueError("tau must be nonzero")
    char = g.form.flat(tau)
    ell = 1
    for c in char:
        ell = ell * c.denominator // math.gcd(ell, c.denominator)
    return ell, char


# ---------------------------------------------------------------- shifting constructions


def _check_integral(ell: int, lam) -> RatVec:
    if ell < 1:
        raise ValueError("ell must be a positive integer")
    scaled = tuple(ell * Fraction(c) for c in lam)
    if any(c.denominator != 1 for c in scaled):
        raise ValueError(f"ell * lambda = {scaled} is not integral")
    return scaled


def shift_rep(spec: RepSpec, g: GroupSpec, ell: int, lam, irrep_weights=None) -> RepSpec:
    """Weights of Sym^ell(E) tensor V_{ell*lambda}; V is left unchanged.

    Slot order: outer index runs over multisets of E slots (lexicographic), inner
    index over `irrep_weights` (default: the single torus weight ell*lambda).
    """
    lam = ratvec(lam)
    if len(lam) != spec.rank or g.rank != spec.rank:
        raise ValueError("lambda, group and representation ranks differ")
    top = _check_integral(ell, lam)
    irrep = [ratvec(w) for w in irrep_weights] if irrep_weights is not None else [top]
    den = 1
    for w in spec.slotsE:
        for c in w:
            den = den * c.denominator // gcd(den, c.denominator)
    slots = [tuple(int(c * den) for c in w) for w in spec.slotsE]
    weights = []
    for combo in combinations_with_replacement(range(len(slots)), ell):
        sigma = tuple(Fraction(sum(slots[i][k] for i in combo), den) for k in range(spec.rank))
        for mu in irrep:
            weights.append(tuple(a + b for a, b in zip(sigma, mu)))
    return RepSpec(spec.rank, tuple(weights), spec.weightsV, spec.form)


def sl2_irrep_weights(n: int) -> list[RatVec]:
    return [(Fraction(n - 2 * k),) for k in range(n + 1)]


def sym_power_coefficients(m, ell: int) -> list[complex]:
    """Monomial-basis coefficients of m^ell: multinomial(ell; alpha) * prod m_i^alpha_i."""
    m = list(m)
    out = []
    for combo in combinations_with_replacement(range(len(m)), ell):
        counts = Counter(combo)
        coef = factorial(ell)
        val = 1 + 0j
        for i, c in counts.items():
            coef //= factorial(c)
            val *= m[i] ** c
        out.append(coef * val)
    return out


def shift_point(x: TorusPoint, ell: int, highest_slot: int = 0, irrep_size: int = 1) -> TorusPoint:
    """m^ell (monomial basis) tensored with the basis vector `highest_slot` of the irrep; V copied."""
    if not 0 <= highest_slot < irrep_size:
        raise ValueError(f"slot {highest_slot} outside an irrep of size {irrep_size}")
    if ell < 1:
        raise ValueError("ell must be a positive integer")
    coeffs = []
    for c in sym_power_coefficients(x.coeffsE, ell):
        for j in range(irrep_size):
            coeffs.append(c if j == highest_slot else 0j)
    return TorusPoint(tuple(coeffs), x.coeffsV)


def character_coords(rep: HermitianRep, char) -> np.ndarray:
    """The element xi of k (orthonormal coordinates) with moment -char on the weight-char line.

    On toral coordinates this is char expressed in the orthonormal basis; an
    SL2 block with character n maps to n * X1.
    """
    char = np.array([float(Fraction(c)) for c in char])
    if len(char) != rep.rank:
        raise ValueError("character rank differs from the representation rank")
    xi = np.zeros(rep.d)
    off_c = off_k = 0
    for b in rep.blocks:
        if b.kind == "torus":
            basis = np.linalg.inv(np.linalg.cholesky(b.form.as_array())).T
            xi[off_k : off_k + b.size] = char[off_c : off_c + b.size] @ basis
        else:
            xi[off_k] = char[off_c]
        off_c += b.rank
        off_k += b.size
    return xi


def orbit_factors(rep: HermitianRep, xi) -> list[tuple[np.ndarray, float, np.ndarray]]:
    """Projective factors (action, weight, base point) modelling the coadjoint orbit of xi.

    The base point has moment exactly -xi. Each SL2 block with xi_b != 0
    contributes P(C^2) with weight |xi_b| at the eigenline of xi_b with
    eigenvalue +i|xi_b|; the torus blocks together contribute one line acting
    by i * xi.
    """
    from .kahler.modules import SU2_BASIS

    xi = np.asarray(xi, dtype=float)
    if xi.shape != (rep.d,):
        raise ValueError(f"expected a {rep.d}-vector")
    factors = []
    line = np.zeros((rep.d, 1, 1), dtype=complex)
    off = 0
    for b in rep.blocks:
        part = xi[off : off + b.size]
        if b.kind == "torus":
            line[off : off + b.size, 0, 0] = 1j * part
        elif np.linalg.norm(part) > 0:
            kf = np.zeros((rep.d, 2, 2), dtype=complex)
            for k in range(3):
                kf[off + k] = SU2_BASIS[k]
            act = np.tensordot(part, np.array(SU2_BASIS), axes=1)
            vals, vecs = np.linalg.eig(act)
            base = vecs[:, int(np.argmax(vals.imag))]
            factors.append((kf, float(np.linalg.norm(part)), base / np.linalg.norm(base)))
        off += b.size
    if np.any(line):
        factors.append((line, 1.0, np.ones(1, dtype=complex)))
    return factors


def shifted_by_direction(rep: HermitianRep, x: StatePoint, xi, ell: int = 1) -> tuple[HermitianRep, StatePoint]:
    """(x^ell, [v]) where v is the weight line of the orbit of xi with moment -ell*xi.

    The Veronese power multiplies the weight of every E factor by ell. Factor
    weights are real numbers, so ell * xi need not be integral: rescaling all
    weights together with v -> v / sqrt(ell) does not change semistability.
    """
    if ell < 1:
        raise ValueError("ell must be a positive integer")
    out = rep.with_weights([ell * w for w in rep.weights])
    m = [x.m]
    for kf, w, base in orbit_factors(rep, ell * np.asarray(xi, dtype=float)):
        out = out.with_factor(kf, w)
        m.append(base)
    return out, out.point(x.v, np.concatenate(m))


def shifted_system(rep: HermitianRep, x: StatePoint, lam, ell: int = 1) -> tuple[HermitianRep, StatePoint]:
    """(x^ell, [v_{ell*lambda}]) for a dominant character lambda and its B-fixed line."""
    return shifted_by_direction(rep, x, character_coords(rep, lam), ell)


# ---------------------------------------------------------------- rep <-> torus data


def torus_spec(rep: HermitianRep, max_den: int = 64) -> RepSpec:
    """Weights of the basis vectors of V and E under the maximal torus, as a RepSpec."""
    wv, we = rep.slot_weights()

    def rat(rows):
        out = []
        for row in rows:
            vec = tuple(Fraction(float(c)).limit_denominator(max_den) for c in row)
            if any(abs(float(a) - c) > 1e-8 for a, c in zip(vec, row)):
                raise ValueError(f"weight {row} is not rational with small denominator")
            out.append(vec)
        return out

    gram = np.zeros((rep.rank, rep.rank), dtype=object)
    gram[:] = Fraction(0)
    off = 0
    for b in rep.blocks:
        if b.kind == "torus":
            for i in range(b.size):
                for j in range(b.size):
                    gram[off + i, off + j] = b.form.gram[i][j]
        else:
            gram[off, off] = Fraction(1)
        off += b.rank
    form = InnerProductForm(tuple(tuple(r) for r in gram))
    return RepSpec(rep.rank, tuple(rat(we)), tuple(rat(wv)), form)


def torus_point(x: StatePoint, rel_tol: float = SUPPORT_REL_TOL) -> TorusPoint:
    """Coordinates in the weight basis with entries below rel_tol * max zeroed."""

    def clean(c):
        c = np.asarray(c, dtype=complex)
        if not c.size:
            return ()
        cut = rel_tol * np.abs(c).max()
        return tuple(complex(z) if abs(z) > cut else 0j for z in c)

    return TorusPoint(clean(x.m), clean(x.v))


# ---------------------------------------------------------------- unipotent sampling


def raising_generators(rep: HermitianRep) -> list[tuple[np.ndarray, np.ndarray]]:
    """(N_V, N_E) for each SL2 block: the raising operator (A2 - i A3)/2."""
    out, off = [], 0
    for b in rep.blocks:
        if b.kind == "su2":
            nv = 0.5 * (rep.kV[off + 1] - 1j * rep.kV[off + 2])
            ne = 0.5 * (rep.kE[off + 1] - 1j * rep.kE[off + 2])
            out.append((nv, ne))
        off += b.size
    return out


@dataclass
class UnipotentSampler:
    """u(s) = exp(sum_j s_j N_j) for commuting nilpotent generators N_j on V and E.

    The default schedule is the identity, the special parameters of the point
    (see `special_parameters`), an unscrambled Halton grid over [-box, box]^k
    and `random_draws` complex Gaussian draws from `seed`; `points` replaces it
    with an explicit list of parameter vectors.
    """

    gens_V: list[np.ndarray]
    gens_E: list[np.ndarray]
    seed: int = 0
    n_grid: int = 64
    random_draws: int = DEFAULT_RANDOM_DRAWS
    box: float = DEFAULT_PARAM_BOX
    points: list | None = None
    refine_roots: bool = True

    def __post_init__(self):
        if len(self.gens_V) != len(self.gens_E):
            raise ValueError("one V generator per E generator")
        for n in list(self.gens_E) + list(self.gens_V):
            n = np.asarray(n)
            if n.size and np.abs(np.linalg.matrix_power(n, n.shape[0])).max() > 1e-9 * max(1.0, np.abs(n).max()):
                raise ValueError("unipotent generators must be nilpotent")

    @classmethod
    def for_rep(cls, rep: HermitianRep, **kw) -> UnipotentSampler:
        gens = raising_generators(rep)
        return cls([g[0] for g in gens], [g[1] for g in gens], **kw)

    @property
    def dim(self) -> int:
        return len(self.gens_E)

    def schedule(self, x: StatePoint | None = None) -> list[np.ndarray]:
        """Parameter vectors to visit; with `x`, the special parameters come first."""
        if self.points is not None:
            return [np.atleast_1d(np.asarray(s, dtype=complex)) for s in self.points]
        k = self.dim
        if k == 0:
            return [np.zeros(0)]
        out = [np.zeros(k, dtype=complex)]
        if x is not None and self.refine_roots:
            out.extend(self.special_parameters(x))
        halton = qmc.Halton(d=k, scramble=False).random(self.n_grid + 1)[1:]
        out.extend((2 * halton - 1) * self.box + 0j)
        rng = np.random.default_rng(self.seed)
        for _ in range(self.random_draws):
            out.append(rng.normal(size=k) + 1j * rng.normal(size=k))
        return out

    def special_parameters(self, x: StatePoint) -> list[np.ndarray]:
        """Parameters along each generator where a coordinate of u(s) x vanishes.

        P_T(u x) only shrinks where coordinates vanish, which happens on a
        measure-zero set that random draws miss. Along the line s = t e_j every
        coordinate of exp(t N_j) x is a polynomial in t; its roots are returned
        (after Newton polishing). For one generator this makes the schedule exact.
        """
        out = []
        vec = np.concatenate([x.v, x.m])
        for j in range(self.dim):
            gen = np.zeros((len(vec), len(vec)), dtype=complex)
            nv = len(x.v)
            gen[:nv, :nv] = self.gens_V[j]
            gen[nv:, nv:] = self.gens_E[j]
            # coefficient vectors of t^k / k! N^k vec
            coeffs, term = [], vec.copy()
            for k in range(len(vec) + 1):
                if not np.any(np.abs(term) > 1e-14 * np.abs(vec).max()):
                    break
                coeffs.append(term / factorial(k))
                term = gen @ term
            if len(coeffs) < 2:
                continue
            poly = np.array(coeffs)  # (degree + 1, n), lowest degree first
            roots = set()
            for c in range(poly.shape[1]):
                col = poly[:, c]
                nz = np.nonzero(np.abs(col) > 1e-14 * np.abs(col).max(initial=0.0))[0]
                if len(nz) < 2:
                    continue
                col = col[: nz[-1] + 1]
                for r in np.roots(col[::-1]):
                    for _ in range(3):
                        val = np.polyval(col[::-1], r)
                        der = np.polyval(np.polyder(col[::-1]), r)
                        if der == 0:
                            break
                        r = r - val / der
                    roots.add(complex(np.round(r.real, 14), np.round(r.imag, 14)))
            for r in sorted(roots, key=lambda z: (z.real, z.imag)):
                s = np.zeros(self.dim, dtype=complex)
                s[j] = r
                out.append(s)
        return out

    def matrices(self, s) -> tuple[np.ndarray, np.ndarray]:
        nv = sum((c * g for c, g in zip(s, self.gens_V)), np.zeros_like(self.gens_V[0], dtype=complex))
        ne = sum((c * g for c, g in zip(s, self.gens_E)), np.zeros_like(self.gens_E[0], dtype=complex))
        return (expm(nv) if nv.size else nv), expm(ne)

    def act(self, s, x: StatePoint) -> StatePoint:
        if self.dim == 0:
            return x
        uv, ue = self.matrices(s)
        v = uv @ x.v if x.v.size else x.v
        return StatePoint(v, ue @ x.m, x.factors)


@dataclass(frozen=True)
class SampledPolyhedron:
    polyhedron: VPolyhedron
    samples_used: int
    distinct: int
    stopped_early: bool
    schedule: tuple = ()
    seed: int = 0
    caveat: str = (
        "finitely many polyhedra occur but no bound on the samples needed is known; "
        "the intersection may still shrink under further samples"
    )


def P_U_sampled(
    spec: RepSpec,
    x: StatePoint,
    sampler: UnipotentSampler,
    stable_run: int = DEFAULT_STABLE_RUN,
    rel_tol: float = SUPPORT_REL_TOL,
    act=None,
) -> SampledPolyhedron:
    """Intersection of P_T(u x) over the sampler's schedule, with early stop.

    `act(s, x)` overrides how u(s) transforms the point (default: the sampler's
    matrices).
    """
    act = act or sampler.act
    sched = sampler.schedule(x)
    if not sched:
        raise ValueError("empty sampling schedule")
    current = None
    seen: set = set()
    unchanged = used = 0
    log = []
    for s in sched:
        used += 1
        log.append(tuple(complex(c) for c in s))
        tp = torus_point(act(s, x), rel_tol)
        key = (tuple(c != 0 for c in tp.coeffsE), tuple(c != 0 for c in tp.coeffsV))
        if key in seen:
            unchanged += 1
        else:
            seen.add(key)
            poly = weight_polyhedron(spec, tp)
            new = poly if current is None else intersect(current, poly)
            unchanged = unchanged + 1 if current is not None and set_equal(new, current) else 0
            current = new
        if unchanged >= stable_run and used > 1:
            return SampledPolyhedron(current, used, len(seen), True, tuple(log), sampler.seed)
    return SampledPolyhedron(current, used, len(seen), False, tuple(log), sampler.seed)


def moment_polyhedron_Bx(g: GroupSpec, sampled: SampledPolyhedron | VPolyhedron) -> VPolyhedron:
    """Dominant chamber intersected with -P_U(x)."""
    poly = sampled.polyhedron if isinstance(sampled, SampledPolyhedron) else sampled
    if poly.is_empty:
        return poly
    if not g.positive_roots:
        return poly.negate()
    return intersect(poly.negate(), g.chamber())


__all__ = [
    "Block",
    "CorruptGroupSpecError",
    "GroupSpec",
    "P_U_sampled",
    "SampledPolyhedron",
    "UnipotentSampler",
    "dominant_representative",
    "moment_polyhedron_Bx",
    "character_coords",
    "orbit_factors",
    "raising_generators",
    "shift_point",
    "shift_rep",
    "shifted_by_direction",
    "shifted_system",
    "sl2_irrep_weights",
    "sym_power_coefficients",
    "tau_flat",
    "torus_point",
    "torus_spec",
]
