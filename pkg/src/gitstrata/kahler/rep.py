"""Hermitian representations of a compact Lie algebra on V and E, and points of V x P(E)."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ..ratgeom import InnerProductForm
from ..torus_git import RepSpec, TorusPoint
from .modules import SU2Module

ANTI_HERMITIAN_TOL = 1e-12
BRACKET_TOL = 1e-9
_UNIT_SLACK = 8 * np.finfo(float).eps


class RepresentationError(ValueError):
    """Action matrices violate the invariants of a unitary Lie algebra representation."""


@dataclass(frozen=True)
class Block:
    """One simple or abelian factor of the Lie algebra.

    kind "torus": `size` coordinates, all toral; `form` is the lattice form.
    kind "su2": three coordinates (X1, X2, X3); X1 spans the maximal torus and
    corresponds to the cocharacter 1 under the form [[1]].
    """

    kind: str
    size: int
    form: InnerProductForm | None = None

    def __post_init__(self):
        if self.kind not in ("torus", "su2"):
            raise RepresentationError(f"unknown block kind {self.kind!r}")
        if self.kind == "su2" and self.size != 3:
            raise RepresentationError("an su2 block has exactly three coordinates")
        if self.kind == "torus" and self.form is None:
            object.__setattr__(self, "form", InnerProductForm.identity(self.size))

    @property
    def rank(self) -> int:
        return self.size if self.kind == "torus" else 1


def _cholesky_basis(form: InnerProductForm) -> np.ndarray:
    """Columns form an orthonormal basis of t for the form (lattice coordinates)."""
    chol = np.linalg.cholesky(form.as_array())
    return np.linalg.inv(chol).T


class HermitianRep:
    """Action of an orthonormal basis of k on V and on E by anti-Hermitian matrices."""

    def __init__(self, kV, kE, blocks=None, check: bool = True, factors=None):
        kE = np.ascontiguousarray(np.asarray(kE, dtype=np.complex128))
        if kE.ndim != 3 or kE.shape[1] != kE.shape[2] or kE.shape[1] == 0:
            raise RepresentationError("E action must be a nonempty stack of square matrices")
        d = kE.shape[0]
        kV = np.asarray(kV, dtype=np.complex128)
        if kV.size == 0:
            kV = np.zeros((d, 0, 0), dtype=np.complex128)
        kV = np.ascontiguousarray(kV)
        if kV.ndim != 3 or kV.shape[0] != d or kV.shape[1] != kV.shape[2]:
            raise RepresentationError("V action must be d square matrices")
        self.kV, self.kE = kV, kE
        if blocks is None:
            blocks = (Block("torus", d),)
        self.blocks = tuple(blocks)
        if sum(b.size for b in self.blocks) != d:
            raise RepresentationError("blocks do not cover the basis of k")
        self.kV.setflags(write=False)
        self.kE.setflags(write=False)
        if factors is None:
            factors = ((self.kE.shape[1], 1.0),)
        self.factors = tuple((int(n), float(w)) for n, w in factors)
        if sum(n for n, _ in self.factors) != self.kE.shape[1] or any(n <= 0 or w <= 0 for n, w in self.factors):
            raise RepresentationError("projective factors must have positive sizes and weights covering E")
        self.bounds = np.concatenate([[0], np.cumsum([n for n, _ in self.factors])]).astype(np.int64)
        self.weights = np.array([w for _, w in self.factors])
        self.bounds.setflags(write=False)
        self.weights.setflags(write=False)
        if len(self.factors) > 1:
            off = self.kE.copy()
            for a, b in zip(self.bounds[:-1], self.bounds[1:]):
                off[:, a:b, a:b] = 0
            if np.any(off):
                raise RepresentationError("the action must preserve each projective factor")
        self.adm = self._structure_constants(check)
        self.adm.setflags(write=False)

    # ---------------------------------------------------------------- basics

    @property
    def d(self) -> int:
        return self.kE.shape[0]

    @property
    def dimV(self) -> int:
        return self.kV.shape[1]

    @property
    def dimE(self) -> int:
        return self.kE.shape[1]

    @property
    def rank(self) -> int:
        return sum(b.rank for b in self.blocks)

    @property
    def factor_sizes(self) -> tuple[int, ...]:
        return tuple(n for n, _ in self.factors)

    def point(self, v, m) -> StatePoint:
        return StatePoint(v, m, self.factor_sizes)

    def with_factor(self, kF, weight: float = 1.0) -> HermitianRep:
        """Append a projective factor P(F) carrying the basis actions kF, with the given weight."""
        kF = np.asarray(kF, dtype=np.complex128)
        if kF.ndim != 3 or kF.shape[0] != self.d:
            raise RepresentationError("factor action must be d square matrices")
        ne, nf = self.dimE, kF.shape[1]
        kE = np.zeros((self.d, ne + nf, ne + nf), dtype=np.complex128)
        kE[:, :ne, :ne] = self.kE
        kE[:, ne:, ne:] = kF
        return HermitianRep(self.kV, kE, self.blocks, factors=self.factors + ((nf, weight),))

    def with_weights(self, weights) -> HermitianRep:
        sizes = self.factor_sizes
        if len(weights) != len(sizes):
            raise RepresentationError("one weight per projective factor")
        return HermitianRep(self.kV, self.kE, self.blocks, check=False, factors=tuple(zip(sizes, weights)))

    @property
    def is_abelian(self) -> bool:
        return not np.any(self.adm)

    def action(self, xi) -> tuple[np.ndarray, np.ndarray]:
        """A_V(xi), A_E(xi) for a real (or complexified) coordinate vector."""
        xi = np.asarray(xi)
        return np.tensordot(xi, self.kV, axes=1), np.tensordot(xi, self.kE, axes=1)

    def stacked(self) -> np.ndarray:
        """Basis actions on V + E as block-diagonal matrices, shape (d, n, n)."""
        n_v, n = self.dimV, self.dimV + self.dimE
        out = np.zeros((self.d, n, n), dtype=np.complex128)
        out[:, :n_v, :n_v] = self.kV
        out[:, n_v:, n_v:] = self.kE
        return out

    def _structure_constants(self, check: bool) -> np.ndarray:
        mats = self.stacked()
        d = self.d
        scale = max(np.abs(mats).max(), 1.0)
        if check:
            herm = np.abs(mats + np.conj(np.transpose(mats, (0, 2, 1)))).max()
            if herm > ANTI_HERMITIAN_TOL * scale:
                raise RepresentationError(f"action matrices are not anti-Hermitian (defect {herm:.2e})")
        flat = mats.reshape(d, -1).T
        adm = np.zeros((d, d, d))
        independent = None
        for i in range(d):
            for j in range(i + 1, d):
                comm = mats[i] @ mats[j] - mats[j] @ mats[i]
                if not np.any(np.abs(comm) > 1e-15 * scale):
                    continue
                # brackets are only recoverable when the action is faithful
                if independent is None:
                    independent = np.linalg.matrix_rank(flat, tol=1e-9 * scale) == d
                    if not independent:
                        raise RepresentationError("basis actions are linearly dependent on V + E")
                coef, *_ = np.linalg.lstsq(flat, comm.ravel(), rcond=None)
                resid = np.abs(flat @ coef - comm.ravel()).max()
                if check and (resid > BRACKET_TOL * scale * scale or np.abs(coef.imag).max() > BRACKET_TOL * scale):
                    raise RepresentationError(f"bracket of basis elements {i},{j} leaves the span (residual {resid:.2e})")
                adm[i][:, j] = coef.real
                adm[j][:, i] = -coef.real
        return adm

    # ---------------------------------------------------------------- torus and Weyl data

    def toral_coords(self) -> list[int]:
        out, off = [], 0
        for b in self.blocks:
            out.extend(range(off, off + b.size) if b.kind == "torus" else [off])
            off += b.size
        return out

    def tau_basis(self) -> np.ndarray:
        """Matrix whose columns are the toral basis elements in lattice coordinates."""
        mats = []
        for b in self.blocks:
            mats.append(_cholesky_basis(b.form) if b.kind == "torus" else np.eye(1))
        out = np.zeros((self.rank, self.rank))
        off = 0
        for m in mats:
            k = m.shape[0]
            out[off : off + k, off : off + k] = m
            off += k
        return out

    def coords_from_tau(self, tau) -> np.ndarray:
        """Orthonormal toral coordinates of a lattice vector tau."""
        return np.linalg.solve(self.tau_basis(), np.array([float(Fraction(t)) for t in tau]))

    def tau_from_coords(self, c) -> np.ndarray:
        return self.tau_basis() @ np.asarray(c, dtype=float)

    def embed_toral(self, c) -> np.ndarray:
        xi = np.zeros(self.d)
        xi[self.toral_coords()] = c
        return xi

    def dominant(self, xi) -> np.ndarray:
        """Toral coordinates of the dominant representative of the K-orbit of xi."""
        xi = np.asarray(xi, dtype=float)
        out, off = [], 0
        for b in self.blocks:
            part = xi[off : off + b.size]
            out.extend(part if b.kind == "torus" else [np.linalg.norm(part)])
            off += b.size
        return np.array(out)

    def slot_weights(self) -> tuple[np.ndarray, np.ndarray]:
        """Torus weights (lattice coordinates) of each basis vector of V and E.

        Requires the toral basis elements to act diagonally; otherwise the
        weights are recovered by simultaneous diagonalization.
        """
        idx = self.toral_coords()
        binv_t = np.linalg.inv(self.tau_basis()).T
        out = []
        for mats in (self.kV, self.kE):
            tor = mats[idx]
            n = mats.shape[1]
            if n == 0:
                out.append(np.zeros((0, self.rank)))
                continue
            off = tor - np.einsum("kii->ki", tor)[:, :, None] * np.eye(n)
            if np.abs(off).max(initial=0.0) < 1e-10:
                diag = np.einsum("kii->ik", tor).imag
            else:
                rng = np.random.default_rng(0)
                combo = np.tensordot(rng.normal(size=len(idx)), tor, axes=1)
                _, vecs = np.linalg.eigh(1j * combo)
                diag = np.einsum("ji,kjl,li->ik", vecs.conj(), tor, vecs).imag
            out.append(diag @ binv_t.T)
        return out[0], out[1]

    def matches(self, spec: RepSpec, tol: float = 1e-9) -> bool:
        """Whether the recovered weights equal the declared RepSpec (as multisets)."""
        wv, we = self.slot_weights()

        def key(arr):
            return sorted(tuple(np.round(r, 6)) for r in arr)

        def declared(slots):
            return sorted(tuple(float(c) for c in w) for w in slots)

        if len(we) != spec.dimE or len(wv) != spec.dimV:
            return False
        for got, want in ((key(we), declared(spec.slotsE)), (key(wv), declared(spec.slotsV))):
            if any(np.abs(np.subtract(a, b)).max(initial=0.0) > max(tol, 1e-6) for a, b in zip(got, want)):
                return False
        return True

    # ---------------------------------------------------------------- builders

    @classmethod
    def from_torus(cls, spec: RepSpec) -> HermitianRep:
        """Diagonal action on the weight basis: basis element b_k acts by i<chi, b_k>."""
        basis = _cholesky_basis(spec.form)

        def stack(slots):
            if not slots:
                return np.zeros((spec.rank, 0, 0), dtype=complex)
            w = np.array([[float(c) for c in s] for s in slots]) @ basis
            return np.array([np.diag(1j * w[:, k]) for k in range(spec.rank)])

        return cls(stack(spec.slotsV), stack(spec.slotsE), (Block("torus", spec.rank, spec.form),))

    @classmethod
    def from_su2(cls, E: SU2Module, V: SU2Module | None = None) -> HermitianRep:
        V = V if V is not None else SU2Module.zero()
        kv = np.array(V.basis) if V.dim else np.zeros((3, 0, 0), dtype=complex)
        return cls(kv, np.array(E.basis), (Block("su2", 3),))


@dataclass(frozen=True, eq=False)
class StatePoint:
    """Concrete representative (v, m); each projective factor of m has unit norm."""

    v: np.ndarray
    m: np.ndarray
    factors: tuple = None

    def __post_init__(self):
        v = np.array(self.v, dtype=np.complex128).ravel()
        m = np.array(self.m, dtype=np.complex128).ravel()
        sizes = (len(m),) if self.factors is None else tuple(int(n) for n in self.factors)
        if sum(sizes) != len(m) or any(n <= 0 for n in sizes):
            raise ValueError(f"factor sizes {sizes} do not partition m of length {len(m)}")
        off = 0
        for n in sizes:
            nm = np.linalg.norm(m[off : off + n])
            if not np.isfinite(nm) or nm == 0:
                raise ValueError("each projective factor of m must be a nonzero finite vector")
            # leave unit factors untouched so normalization is idempotent (exact JSON round trips)
            if abs(nm - 1.0) > _UNIT_SLACK:
                m[off : off + n] /= nm
            off += n
        v.setflags(write=False)
        m.setflags(write=False)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "factors", sizes)

    @classmethod
    def from_torus_point(cls, x: TorusPoint) -> StatePoint:
        return cls(np.array(x.coeffsV, dtype=complex), np.array(x.coeffsE, dtype=complex))

    def pack(self) -> np.ndarray:
        return np.concatenate([self.v, self.m]).view(np.float64).copy()

    @classmethod
    def unpack(cls, y: np.ndarray, n_v: int, n_e: int, factors=None) -> StatePoint:
        z = np.asarray(y[: 2 * (n_v + n_e)], dtype=np.float64).view(np.complex128)
        return cls(z[:n_v].copy(), z[n_v:].copy(), factors)

    def parts(self):
        """The unit factors of m as a list of views."""
        out, off = [], 0
        for n in self.factors:
            out.append(self.m[off : off + n])
            off += n
        return out

    def check(self, rep: HermitianRep) -> None:
        if self.v.shape[0] != rep.dimV or self.m.shape[0] != rep.dimE:
            raise ValueError(
                f"point has dimensions ({self.v.shape[0]}, {self.m.shape[0]}), "
                f"representation ({rep.dimV}, {rep.dimE})"
            )
        if self.factors != rep.factor_sizes:
            raise ValueError(f"point factors {self.factors} differ from representation factors {rep.factor_sizes}")
