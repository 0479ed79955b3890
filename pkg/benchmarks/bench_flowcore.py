"""Compare the compiled flow kernels with the numpy fallback.

    python benchmarks/bench_flowcore.py [--repeat N] [--flows K]

Reports microseconds per right-hand-side evaluation at several sizes, and the
wall time of complete flows with each backend swapped into the integrator.
"""

from __future__ import annotations

import argparse
import time
import timeit

import numpy as np

from gitstrata.crosscheck import SL2Family
from gitstrata.kahler import HermitianRep, SU2Module, _kernels, flow
from gitstrata.kahler import _flowcore_py

try:
    from gitstrata.kahler import _flowcore
except ImportError:
    _flowcore = None

BACKENDS = {"python": _flowcore_py, "cython": _flowcore}


def rhs_args(e_irreps, v_irreps, companion, rng):
    rep = HermitianRep.from_su2(SU2Module.from_irreps(e_irreps), SU2Module.from_irreps(v_irreps))
    z = rng.normal(size=rep.dimV + rep.dimE) + 1j * rng.normal(size=rep.dimV + rep.dimE)
    x = rep.point(z[: rep.dimV], z[rep.dimV :])
    parts = [x.pack()]
    if companion:
        parts.append(np.zeros(rep.d))
    if companion == 2:
        parts.append(np.eye(rep.d).ravel())
    y = np.concatenate(parts)
    return rep, (y, rep.kV, rep.kE, rep.adm, rep.dimV, rep.dimE, rep.bounds, rep.weights, companion)


def bench_rhs(repeat):
    rng = np.random.default_rng(0)
    print(f"{'E':>10} {'V':>8} {'comp':>4} " + " ".join(f"{name:>12}" for name in BACKENDS))
    for e, v in (((3,), ()), ((3, 2), (1,)), ((5, 4), (3,)), ((9, 8), (2, 1))):
        for companion in (0, 2):
            _, args = rhs_args(e, v, companion, rng)
            row = []
            for mod in BACKENDS.values():
                if mod is None:
                    row.append(f"{'n/a':>12}")
                    continue
                t = min(timeit.repeat(lambda: mod.flow_rhs(*args), number=repeat, repeat=3)) / repeat
                row.append(f"{t * 1e6:>10.1f}us")
            print(f"{str(e):>10} {str(v):>8} {companion:>4} " + " ".join(row))


def bench_flows(count):
    points = [(i.rep(), i.state()) for i in SL2Family(count, seed=1, kind="generic").instances()]
    saved = (_kernels.flow_rhs, _kernels.flow_diagnostics, _kernels.moment_parts)
    try:
        for name, mod in BACKENDS.items():
            if mod is None:
                continue
            _kernels.flow_rhs, _kernels.flow_diagnostics, _kernels.moment_parts = (
                mod.flow_rhs, mod.flow_diagnostics, mod.moment_parts)
            start = time.perf_counter()
            nfev = sum(flow(rep, x).nfev for rep, x in points)
            print(f"{name:>8}: {count} flows in {time.perf_counter() - start:.2f}s ({nfev} RHS evaluations)")
    finally:
        _kernels.flow_rhs, _kernels.flow_diagnostics, _kernels.moment_parts = saved


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=2000)
    parser.add_argument("--flows", type=int, default=10)
    args = parser.parse_args()
    print(f"active backend: {_kernels.BACKEND}\n")
    bench_rhs(args.repeat)
    print()
    bench_flows(args.flows)


if __name__ == "__main__":
    main()
