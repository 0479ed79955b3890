"""JSON encodings of every value the command line reads or writes.

Rationals are "p/q" strings, complex numbers are [re, im] pairs and complex
matrices are row-major nested lists of such pairs. Each `*_to_json` has a
`*_from_json` inverse such that re-encoding reproduces the same JSON.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

import jsonschema
import numpy as np

from .group_git import GroupSpec, SampledPolyhedron, UnipotentSampler, torus_spec
from .kahler.flow import FlowResult
from .kahler.modules import SU2Module
from .kahler.rep import Block, HermitianRep, StatePoint
from .ratgeom import (
    InnerProductForm,
    form_from_json,
    form_to_json,
    polyhedron_from_json,
    polyhedron_to_json,
    rational_from_json,
    rational_to_str,
    vec_from_json,
    vec_to_json,
)
from .torus_git import RepSpec, Status, Stratum, TorusPoint, Verdict

FORMAT_VERSION = "gitstrata/1"


class SchemaError(ValueError):
    """Malformed or inconsistent input; carries the 1-based line and column when known."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        where = f"line {line}, column {column}: " if line is not None else ""
        super().__init__(where + message)
        self.line, self.column = line, column


# ---------------------------------------------------------------- scalars and arrays


def complex_to_json(z) -> list[float]:
    z = complex(z)
    return [z.real, z.imag]


def complex_from_json(pair) -> complex:
    return complex(float(pair[0]), float(pair[1]))


def cvec_to_json(vec) -> list[list[float]]:
    return [complex_to_json(z) for z in vec]


def cvec_from_json(data) -> np.ndarray:
    return np.array([complex_from_json(p) for p in data], dtype=complex).reshape(len(data))


def cmat_to_json(mat) -> list:
    return [cvec_to_json(row) for row in np.asarray(mat)]


def cmat_from_json(data, n: int | None = None) -> np.ndarray:
    rows = [cvec_from_json(r) for r in data]
    if not rows:
        return np.zeros((0, 0) if n is None else (n, n), dtype=complex)
    return np.array(rows)


def rvec_to_json(vec) -> list:
    return [None if math.isnan(float(c)) else float(c) for c in np.asarray(vec, dtype=float)]


def rvec_from_json(data) -> np.ndarray:
    return np.array([math.nan if c is None else float(c) for c in data])


def _float(x) -> float | str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "-inf" if x < 0 else "inf"
    return x


def _unfloat(x) -> float:
    return float(x)


# ---------------------------------------------------------------- exact layer


def repspec_to_json(spec: RepSpec) -> dict:
    def entries(ws):
        return [{"weight": vec_to_json(w), "mult": k} for w, k in ws]

    return {
        "rank": spec.rank,
        "form": form_to_json(spec.form),
        "weightsE": entries(spec.weightsE),
        "weightsV": entries(spec.weightsV),
    }


def repspec_from_json(data: dict) -> RepSpec:
    def entries(ws):
        out = []
        for e in ws:
            if isinstance(e, dict):
                out.append((vec_from_json(e["weight"]), int(e.get("mult", 1))))
            else:
                out.append((vec_from_json(e), 1))
        return tuple(out)

    rank = int(data["rank"])
    form = form_from_json(data["form"]) if data.get("form") is not None else InnerProductForm.identity(rank)
    return RepSpec(rank, entries(data["weightsE"]), entries(data.get("weightsV", [])), form)


def torus_point_to_json(x: TorusPoint) -> dict:
    return {"E": cvec_to_json(x.coeffsE), "V": cvec_to_json(x.coeffsV)}


def torus_point_from_json(data: dict) -> TorusPoint:
    return TorusPoint(tuple(cvec_from_json(data["E"])), tuple(cvec_from_json(data.get("V", []))))


def verdict_to_json(v: Verdict) -> dict:
    out: dict[str, Any] = {"status": v.status.value}
    if v.status is Status.UNSTABLE:
        out["Msq"] = rational_to_str(v.Msq)
        out["tau_x"] = vec_to_json(v.tau_x)
    return out


def verdict_from_json(data: dict) -> Verdict:
    status = Status(data["status"])
    if status is Status.UNSTABLE:
        return Verdict(status, rational_from_json(data["Msq"]), vec_from_json(data["tau_x"]))
    return Verdict(status)


def stratum_to_json(s: Stratum) -> dict:
    label = s.label.value if isinstance(s.label, Status) else vec_to_json(s.label)
    return {
        "label": label,
        "Msq": rational_to_str(s.Msq),
        "support_E": [vec_to_json(w) for w in s.support_E],
        "support_V": [vec_to_json(w) for w in s.support_V],
    }


def stratum_from_json(data: dict) -> Stratum:
    label = Status(data["label"]) if isinstance(data["label"], str) else vec_from_json(data["label"])
    return Stratum(
        label,
        rational_from_json(data["Msq"]),
        tuple(vec_from_json(w) for w in data["support_E"]),
        tuple(vec_from_json(w) for w in data["support_V"]),
    )


def groupspec_to_json(g: GroupSpec) -> dict:
    return {
        "rank": g.rank,
        "form": form_to_json(g.form),
        "positive_roots": [vec_to_json(r) for r in g.positive_roots],
        "weyl": [[list(row) for row in w] for w in g.weyl_elements],
        "blocks": [[kind, size] for kind, size in g.blocks],
    }


def groupspec_from_json(data: dict) -> GroupSpec:
    return GroupSpec(
        int(data["rank"]),
        tuple(vec_from_json(r) for r in data.get("positive_roots", [])),
        tuple(tuple(tuple(int(c) for c in row) for row in w) for w in data["weyl"]),
        form_from_json(data["form"]) if data.get("form") is not None else None,
        tuple((str(k), int(s)) for k, s in data.get("blocks", [])),
    )


def sampled_to_json(s: SampledPolyhedron) -> dict:
    return {
        "polyhedron": polyhedron_to_json(s.polyhedron),
        "samples_used": s.samples_used,
        "distinct_supports": s.distinct,
        "stopped_early": s.stopped_early,
        "seed": s.seed,
        "schedule": [cvec_to_json(p) for p in s.schedule],
        "caveat": s.caveat,
    }


def sampled_from_json(data: dict) -> SampledPolyhedron:
    return SampledPolyhedron(
        polyhedron_from_json(data["polyhedron"]),
        int(data["samples_used"]),
        int(data["distinct_supports"]),
        bool(data["stopped_early"]),
        tuple(tuple(cvec_from_json(p)) for p in data["schedule"]),
        int(data["seed"]),
        data["caveat"],
    )


# ---------------------------------------------------------------- numerical layer


def hermitian_to_json(rep: HermitianRep) -> dict:
    blocks = []
    for b in rep.blocks:
        entry = {"kind": b.kind, "size": b.size}
        if b.kind == "torus":
            entry["form"] = form_to_json(b.form)
        blocks.append(entry)
    return {
        "kV": [cmat_to_json(a) for a in rep.kV],
        "kE": [cmat_to_json(a) for a in rep.kE],
        "blocks": blocks,
        "factors": [[int(n), float(w)] for n, w in rep.factors],
    }


def hermitian_from_json(data: dict) -> HermitianRep:
    if "su2" in data:
        e = SU2Module.from_irreps(data["su2"]["E"])
        v = SU2Module.from_irreps(data["su2"].get("V", []))
        return HermitianRep.from_su2(e, v)
    blocks = tuple(
        Block(b["kind"], int(b["size"]), form_from_json(b["form"]) if b.get("form") is not None else None)
        for b in data["blocks"]
    )
    kE = np.array([cmat_from_json(a) for a in data["kE"]])
    d = kE.shape[0]
    kV = [cmat_from_json(a) for a in data.get("kV", [])]
    kV = np.array(kV) if kV and kV[0].size else np.zeros((d, 0, 0), dtype=complex)
    factors = data.get("factors")
    factors = tuple((int(n), float(w)) for n, w in factors) if factors else None
    return HermitianRep(kV, kE, blocks, factors=factors)


def state_to_json(x: StatePoint) -> dict:
    return {"v": cvec_to_json(x.v), "m": cvec_to_json(x.m), "factors": list(x.factors)}


def state_from_json(data: dict) -> StatePoint:
    return StatePoint(cvec_from_json(data["v"]), cvec_from_json(data["m"]), tuple(int(n) for n in data["factors"]))


_FLOW_FLOATS = ("grad_norm_final", "xi_err", "M_estimate", "t_final")
_FLOW_INTS = ("steps", "nfev", "njev", "f_increases", "phi_increases")
_FLOW_VECS = ("phi_inf", "beta", "beta_tau", "xi_inf")


def flow_result_to_json(r: FlowResult) -> dict:
    out: dict[str, Any] = {"x_inf": state_to_json(r.x_inf)}
    out.update({k: rvec_to_json(getattr(r, k)) for k in _FLOW_VECS})
    out.update({k: _float(getattr(r, k)) for k in _FLOW_FLOATS})
    out.update({k: int(getattr(r, k)) for k in _FLOW_INTS})
    out["converged"] = bool(r.converged)
    out["semistable"] = bool(r.semistable)
    out["reason"] = r.reason
    return out


def flow_result_from_json(data: dict) -> FlowResult:
    kw: dict[str, Any] = {"x_inf": state_from_json(data["x_inf"])}
    kw.update({k: rvec_from_json(data[k]) for k in _FLOW_VECS})
    kw.update({k: _unfloat(data[k]) for k in _FLOW_FLOATS})
    kw.update({k: int(data[k]) for k in _FLOW_INTS})
    return FlowResult(
        converged=bool(data["converged"]), reason=data["reason"], trajectory=np.zeros((0, 4)), **kw
    )


TRAJECTORY_COLUMNS = ("t", "f", "phi_norm", "grad_norm")


def write_trajectory_csv(path, trajectory: np.ndarray) -> None:
    np.savetxt(path, np.asarray(trajectory), delimiter=",", header=",".join(TRAJECTORY_COLUMNS), comments="", fmt="%.17g")


def read_trajectory_csv(path) -> np.ndarray:
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    if tuple(header) != TRAJECTORY_COLUMNS:
        raise SchemaError(f"trajectory columns {header} differ from {list(TRAJECTORY_COLUMNS)}")
    return np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)


# ---------------------------------------------------------------- instance files

_RAT = {"oneOf": [{"type": "integer"}, {"type": "string", "pattern": r"^-?\d+(/\d+)?$"}]}
_RATVEC = {"type": "array", "items": _RAT}
_FORM = {"type": "array", "items": _RATVEC, "minItems": 1}
_COMPLEX = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}
_CVEC = {"type": "array", "items": _COMPLEX}
_CMAT = {"type": "array", "items": _CVEC}
_WEIGHT_ENTRY = {
    "oneOf": [
        _RATVEC,
        {
            "type": "object",
            "required": ["weight"],
            "properties": {"weight": _RATVEC, "mult": {"type": "integer", "minimum": 1}},
            "additionalProperties": False,
        },
    ]
}

INSTANCE_SCHEMA = {
    "type": "object",
    "required": ["version", "points"],
    "anyOf": [{"required": ["rep"]}, {"required": ["hermitian"]}],
    "additionalProperties": False,
    "properties": {
        "version": {"const": FORMAT_VERSION},
        "rep": {
            "type": "object",
            "required": ["rank", "weightsE"],
            "additionalProperties": False,
            "properties": {
                "rank": {"type": "integer", "minimum": 1},
                "form": _FORM,
                "weightsE": {"type": "array", "items": _WEIGHT_ENTRY, "minItems": 1},
                "weightsV": {"type": "array", "items": _WEIGHT_ENTRY},
            },
        },
        "group": {
            "type": "object",
            "required": ["rank", "weyl"],
            "additionalProperties": False,
            "properties": {
                "rank": {"type": "integer", "minimum": 1},
                "form": _FORM,
                "positive_roots": {"type": "array", "items": _RATVEC},
                "weyl": {
                    "type": "array",
                    "minItems": 1,
                    "items": {"type": "array", "items": {"type": "array", "items": {"type": "integer"}}},
                },
                "blocks": {"type": "array"},
                "action": {
                    "type": "object",
                    "required": ["E"],
                    "additionalProperties": False,
                    "properties": {"E": {"type": "array", "items": _CMAT}, "V": {"type": "array", "items": _CMAT}},
                },
            },
        },
        "hermitian": {
            "type": "object",
            "oneOf": [
                {
                    "required": ["su2"],
                    "properties": {
                        "su2": {
                            "type": "object",
                            "required": ["E"],
                            "properties": {
                                "E": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1},
                                "V": {"type": "array", "items": {"type": "integer", "minimum": 0}},
                            },
                            "additionalProperties": False,
                        }
                    },
                    "additionalProperties": False,
                },
                {
                    "required": ["kE", "blocks"],
                    "properties": {
                        "kV": {"type": "array", "items": _CMAT},
                        "kE": {"type": "array", "items": _CMAT, "minItems": 1},
                        "blocks": {
                            "type": "array",
                            "minItems": 1,
                            "items": {
                                "type": "object",
                                "required": ["kind", "size"],
                                "properties": {
                                    "kind": {"enum": ["torus", "su2"]},
                                    "size": {"type": "integer", "minimum": 1},
                                    "form": _FORM,
                                },
                                "additionalProperties": False,
                            },
                        },
                        "factors": {"type": "array"},
                    },
                    "additionalProperties": False,
                },
            ],
        },
        "points": {
            "type": "object",
            "minProperties": 1,
            "additionalProperties": {
                "type": "object",
                "required": ["E"],
                "properties": {"E": _CVEC, "V": _CVEC},
                "additionalProperties": False,
            },
        },
    },
}


@dataclass
class InstanceFile:
    spec: RepSpec
    points: dict[str, TorusPoint]
    group: GroupSpec | None = None
    hermitian: HermitianRep | None = None
    version: str = FORMAT_VERSION
    raw: dict = field(default_factory=dict, repr=False)
    unipotent: tuple[list[np.ndarray], list[np.ndarray]] | None = None

    def point(self, name: str | None) -> TorusPoint:
        if name is None:
            if len(self.points) != 1:
                raise SchemaError(f"choose a point with --point among {sorted(self.points)}")
            return next(iter(self.points.values()))
        if name not in self.points:
            raise SchemaError(f"no point named {name!r}; available: {sorted(self.points)}")
        return self.points[name]

    def numeric(self) -> HermitianRep:
        return self.hermitian if self.hermitian is not None else HermitianRep.from_torus(self.spec)

    def groupspec(self) -> GroupSpec:
        if self.group is not None:
            return self.group
        if self.hermitian is not None:
            return GroupSpec.from_rep(self.hermitian)
        return GroupSpec.torus(self.spec.rank, self.spec.form)

    def sampler(self, **kw) -> UnipotentSampler:
        """Unipotent sampler from the group's action block, else from the SL2 blocks."""
        if self.unipotent is not None:
            return UnipotentSampler(*self.unipotent, **kw)
        if self.hermitian is not None:
            return UnipotentSampler.for_rep(self.hermitian, **kw)
        return UnipotentSampler([], [], **kw)

    def state(self, name: str | None) -> StatePoint:
        x = self.point(name)
        return self.numeric().point(np.array(x.coeffsV), np.array(x.coeffsE))

    def to_json(self) -> dict:
        out: dict[str, Any] = {"version": self.version, "rep": repspec_to_json(self.spec)}
        if self.group is not None:
            out["group"] = groupspec_to_json(self.group)
            if self.unipotent is not None:
                gens_v, gens_e = self.unipotent
                out["group"]["action"] = {"E": [cmat_to_json(n) for n in gens_e], "V": [cmat_to_json(n) for n in gens_v]}
        if self.hermitian is not None:
            out["hermitian"] = self.raw.get("hermitian") or hermitian_to_json(self.hermitian)
        out["points"] = {k: torus_point_to_json(p) for k, p in self.points.items()}
        return out


def _skip_ws(text: str, i: int) -> int:
    while i < len(text) and text[i] in " \t\r\n":
        i += 1
    return i


def locate(text: str, path) -> int:
    """Character offset of the value at a JSON path (best effort)."""
    decoder = json.JSONDecoder()
    i = _skip_ws(text, 0)
    for key in path:
        if i >= len(text) or text[i] not in "{[":
            break
        closing = "}" if text[i] == "{" else "]"
        is_obj = closing == "}"
        i = _skip_ws(text, i + 1)
        index = 0
        found = False
        while i < len(text) and text[i] != closing:
            if is_obj:
                name, i = json.decoder.scanstring(text, i + 1)
                i = _skip_ws(text, i)
                i = _skip_ws(text, i + 1)
                hit = name == key
            else:
                hit = index == key
            if hit:
                found = True
                break
            _, i = decoder.raw_decode(text, i)
            i = _skip_ws(text, i)
            if i < len(text) and text[i] == ",":
                i = _skip_ws(text, i + 1)
            index += 1
        if not found:
            break
    return i


def _line_col(text: str, offset: int) -> tuple[int, int]:
    line = text.count("\n", 0, offset) + 1
    col = offset - (text.rfind("\n", 0, offset) + 1) + 1
    return line, col


def parse_instance(text: str) -> InstanceFile:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(exc.msg, exc.lineno, exc.colno) from None
    validator = jsonschema.Draft202012Validator(INSTANCE_SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda e: (len(e.absolute_path), list(map(str, e.absolute_path))))
    if errors:
        err = max(errors, key=lambda e: len(e.absolute_path))
        path = list(err.absolute_path)
        line, col = _line_col(text, locate(text, path))
        where = "/".join(map(str, path)) or "<root>"
        raise SchemaError(f"{where}: {err.message}", line, col)

    def at(path, exc):
        line, col = _line_col(text, locate(text, path))
        return SchemaError(str(exc), line, col)

    try:
        hermitian = hermitian_from_json(data["hermitian"]) if "hermitian" in data else None
    except (ValueError, KeyError) as exc:
        raise at(["hermitian"], exc) from None
    try:
        spec = repspec_from_json(data["rep"]) if "rep" in data else torus_spec(hermitian)
    except (ValueError, KeyError, ZeroDivisionError) as exc:
        raise at(["rep"], exc) from None
    try:
        group = groupspec_from_json(data["group"]) if "group" in data else None
    except (ValueError, KeyError) as exc:
        raise at(["group"], exc) from None
    if group is not None and group.rank != spec.rank:
        raise at(["group", "rank"], f"group rank {group.rank} differs from representation rank {spec.rank}")
    if hermitian is not None:
        _check_matching(spec, hermitian, lambda exc: at(["hermitian"], exc))
    unipotent = None
    if "action" in data.get("group", {}):
        try:
            unipotent = _unipotent_from_json(data["group"]["action"], spec)
        except ValueError as exc:
            raise at(["group", "action"], exc) from None
    points = {}
    for name, p in data["points"].items():
        x = torus_point_from_json(p)
        if len(x.coeffsE) != spec.dimE or len(x.coeffsV) != spec.dimV:
            raise at(["points", name], f"point {name!r} has {len(x.coeffsE)} E / {len(x.coeffsV)} V coefficients, "
                     f"expected {spec.dimE} / {spec.dimV}")
        if not any(x.coeffsE):
            raise at(["points", name, "E"], f"point {name!r} has m = 0")
        points[name] = x
    return InstanceFile(spec, points, group, hermitian, data["version"], raw=data, unipotent=unipotent)


def _unipotent_from_json(action: dict, spec: RepSpec):
    gens_e = [cmat_from_json(n) for n in action["E"]]
    gens_v = [cmat_from_json(n) for n in action.get("V", [])] or [np.zeros((spec.dimV, spec.dimV), complex) for _ in gens_e]
    if len(gens_v) != len(gens_e):
        raise ValueError(f"{len(gens_e)} E generators but {len(gens_v)} V generators")
    for name, gens, n in (("E", gens_e, spec.dimE), ("V", gens_v, spec.dimV)):
        for k, g in enumerate(gens):
            if g.shape != (n, n):
                raise ValueError(f"{name} generator {k} has shape {g.shape}, expected {(n, n)}")
    UnipotentSampler(gens_v, gens_e)
    return gens_v, gens_e


def _check_matching(spec: RepSpec, rep: HermitianRep, error) -> None:
    """Slot-by-slot agreement of the recovered weights with the declared ones."""
    if rep.rank != spec.rank:
        raise error(f"Hermitian rank {rep.rank} differs from representation rank {spec.rank}")
    wv, we = rep.slot_weights()
    for name, got, want in (("E", we, spec.slotsE), ("V", wv, spec.slotsV)):
        if len(got) != len(want):
            raise error(f"Hermitian {name} has dimension {len(got)}, representation has {len(want)} slots")
        for k, (g, w) in enumerate(zip(got, want)):
            if np.abs(g - np.array([float(c) for c in w])).max(initial=0.0) > 1e-8:
                raise error(f"{name} slot {k}: recovered weight {np.round(g, 6).tolist()} differs from {vec_to_json(w)}")


def load_instance(path) -> InstanceFile:
    with open(path) as fh:
        return parse_instance(fh.read())


def dumps(data) -> str:
    return json.dumps(data, indent=2, sort_keys=False)


__all__ = [
    "FORMAT_VERSION",
    "INSTANCE_SCHEMA",
    "InstanceFile",
    "SchemaError",
    "TRAJECTORY_COLUMNS",
    "cmat_from_json",
    "cmat_to_json",
    "complex_from_json",
    "complex_to_json",
    "cvec_from_json",
    "cvec_to_json",
    "dumps",
    "flow_result_from_json",
    "flow_result_to_json",
    "groupspec_from_json",
    "groupspec_to_json",
    "hermitian_from_json",
    "hermitian_to_json",
    "load_instance",
    "locate",
    "parse_instance",
    "read_trajectory_csv",
    "repspec_from_json",
    "repspec_to_json",
    "sampled_from_json",
    "sampled_to_json",
    "state_from_json",
    "state_to_json",
    "stratum_from_json",
    "stratum_to_json",
    "torus_point_from_json",
    "torus_point_to_json",
    "verdict_from_json",
    "verdict_to_json",
    "write_trajectory_csv",
]
