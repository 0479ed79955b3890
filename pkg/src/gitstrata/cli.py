"""Command-line entry point.

Exit codes: 0 success, 2 validation error, 3 non-convergence, 4 check failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .crosscheck.checks import bx_data, check_theorem_C
from .crosscheck.report import worker_count
from .crosscheck.suites import SUITES, run_suite
from .group_git import DEFAULT_RANDOM_DRAWS, P_U_sampled, moment_polyhedron_Bx
from .io import (
    FORMAT_VERSION,
    SchemaError,
    dumps,
    flow_result_to_json,
    load_instance,
    sampled_to_json,
    stratum_to_json,
    verdict_to_json,
    write_trajectory_csv,
)
from .kahler import FlowOptions, NonConverged, NumericalError, flow
from .ratgeom import polyhedron_to_json
from .torus_git import analyze, enumerate_strata, moment_polyhedron_T

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NONCONVERGED = 3
EXIT_CHECK_FAILED = 4


class CommandFailed(Exception):
    def __init__(self, code: int, payload: dict | None, message: str):
        super().__init__(message)
        self.code, self.payload = code, payload


def _emit(data: dict, out: str | None) -> None:
    text = dumps(data) + "\n"
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _instance(args):
    if args.in_path is None:
        raise SchemaError("--in is required")
    try:
        return load_instance(args.in_path)
    except OSError as exc:
        raise SchemaError(f"cannot read {args.in_path}: {exc.strerror}") from None


def cmd_analyze(args) -> dict:
    inst = _instance(args)
    return verdict_to_json(analyze(inst.spec, inst.point(args.point)))


def cmd_stratify(args) -> dict:
    inst = _instance(args)
    return {"strata": [stratum_to_json(s) for s in enumerate_strata(inst.spec)]}


def _flow_options(args) -> FlowOptions:
    kw = {}
    if args.tol_grad is not None:
        kw["tol_grad"] = args.tol_grad
    if args.t_max is not None:
        kw["t_max"] = args.t_max
    return FlowOptions(**kw)


def cmd_flow(args) -> dict:
    inst = _instance(args)
    rep, x = inst.numeric(), inst.state(args.point)
    try:
        result = flow(rep, x, _flow_options(args))
    except NonConverged as exc:
        if args.csv:
            write_trajectory_csv(args.csv, exc.result.trajectory)
        raise CommandFailed(EXIT_NONCONVERGED, flow_result_to_json(exc.result), str(exc)) from None
    except NumericalError as exc:
        raise CommandFailed(EXIT_NONCONVERGED, None, str(exc)) from None
    if args.csv:
        write_trajectory_csv(args.csv, result.trajectory)
    return flow_result_to_json(result)


def _sampled_Bx(inst, args):
    sampler = inst.sampler(seed=args.seed, random_draws=args.samples)
    sampled = P_U_sampled(inst.spec, inst.state(args.point), sampler)
    return sampled, moment_polyhedron_Bx(inst.groupspec(), sampled)


def cmd_polytope(args) -> dict:
    inst = _instance(args)
    if args.mode == "T":
        return {"mode": "T", "polyhedron": polyhedron_to_json(moment_polyhedron_T(inst.spec, inst.point(args.point)))}
    sampled, poly = _sampled_Bx(inst, args)
    return {"mode": "Bx", "polyhedron": polyhedron_to_json(poly), "sampling": sampled_to_json(sampled)}


def cmd_theorem_c(args) -> dict:
    """C(closure of Bx) with its sample log, and the two-sided check for a single SL2 factor."""
    inst = _instance(args)
    sampled, poly = _sampled_Bx(inst, args)
    out = {"polyhedron": polyhedron_to_json(poly), "sampling": sampled_to_json(sampled)}
    rep = inst.numeric()
    if len(rep.blocks) == 1 and rep.blocks[0].kind == "su2":
        name = args.point or next(iter(inst.points))
        payload = {"name": name, "file": inst.to_json()}
        sampler = inst.sampler(seed=args.seed, random_draws=args.samples)
        data = bx_data(rep, inst.state(args.point), sampler, payload, seed=args.seed, opts=_flow_options(args))
        report = check_theorem_C([data])
        out["check"] = report.to_json()
        if not report.passed:
            raise CommandFailed(EXIT_CHECK_FAILED, out, report.summary())
    return out


def cmd_crosscheck(args) -> dict:
    reports = run_suite(args.suite, seed=args.seed, count=args.samples)
    for r in reports:
        print(r.summary(), file=sys.stderr)
    out = {
        "version": FORMAT_VERSION,
        "suite": args.suite,
        "seed": args.seed,
        "passed": all(r.passed for r in reports),
        "reports": [r.to_json() for r in reports],
    }
    if not out["passed"]:
        raise CommandFailed(EXIT_CHECK_FAILED, out, "check failures")
    return out


def _positive_float(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return value


def _nonnegative_int(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gitstrata", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, point=True):
        p.add_argument("--in", dest="in_path", metavar="FILE", help="instance file (JSON)")
        if point:
            p.add_argument("--point", help="name of the point in the instance file")
        p.add_argument("--out", help="output file (default: stdout)")

    common(sub.add_parser("analyze", help="exact torus verdict for a point"))
    common(sub.add_parser("stratify", help="realized stratum labels"), point=False)

    p = sub.add_parser("flow", help="gradient flow of |moment|^2")
    common(p)
    p.add_argument("--tol-grad", type=_positive_float)
    p.add_argument("--t-max", type=_positive_float)
    p.add_argument("--csv", help="write the trajectory (t, f, phi_norm, grad_norm) here")

    for name, help_text in (("polytope", "moment polyhedron of the torus or Borel orbit closure"),
                            ("theorem-c", "C(closure of Bx) with sample log and two-sided check")):
        p = sub.add_parser(name, help=help_text)
        common(p)
        if name == "polytope":
            p.add_argument("--mode", choices=("T", "Bx"), default="T")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--samples", type=_nonnegative_int, default=DEFAULT_RANDOM_DRAWS,
                       help="random unipotent draws after the deterministic grid")
        if name == "theorem-c":
            p.add_argument("--tol-grad", type=_positive_float)
            p.add_argument("--t-max", type=_positive_float)

    p = sub.add_parser("crosscheck", help="run a check suite")
    p.add_argument("--suite", required=True, choices=[*SUITES, "all"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=_nonnegative_int, help="override the suite's primary family size")
    p.add_argument("--out", help="report file (default: stdout)")
    return parser


COMMANDS = {
    "analyze": cmd_analyze,
    "stratify": cmd_stratify,
    "flow": cmd_flow,
    "polytope": cmd_polytope,
    "theorem-c": cmd_theorem_c,
    "crosscheck": cmd_crosscheck,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_VALIDATION
    try:
        worker_count()
        _emit(COMMANDS[args.command](args), args.out)
    except CommandFailed as exc:
        if exc.payload is not None:
            _emit(exc.payload, args.out)
        print(f"gitstrata: {exc}", file=sys.stderr)
        return exc.code
    except (SchemaError, ValueError, json.JSONDecodeError) as exc:
        print(f"gitstrata: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
