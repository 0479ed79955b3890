"""Check reports, instance payloads and the worker pool."""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

from ..io import FORMAT_VERSION, cvec_to_json, repspec_to_json, torus_point_to_json
from .families import SL2Instance, TorusInstance

THREADS_ENV = "GITSTRATA_THREADS"


@dataclass
class CheckReport:
    name: str
    instances_run: int = 0
    failures: list[dict] = field(default_factory=list)
    max_deviation: float = 0.0
    tolerances: dict[str, float] = field(default_factory=dict)
    skipped: int = 0
    seed: int | None = None
    details: dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.failures

    def observe(self, deviation: float) -> None:
        if math.isnan(deviation) or deviation > self.max_deviation:
            self.max_deviation = math.inf if math.isnan(deviation) else float(deviation)

    def fail(self, payload: dict, reason: str, deviation: float | None = None) -> None:
        if deviation is not None:
            self.observe(deviation)
        self.failures.append({"reason": reason, "deviation": _num(deviation), "instance": payload})

    def merge(self, other: CheckReport) -> None:
        self.instances_run += other.instances_run
        self.failures.extend(other.failures)
        self.skipped += other.skipped
        self.observe(other.max_deviation)

    def summary(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return (
            f"{verdict} {self.name}: {self.instances_run} run, {self.skipped} skipped, "
            f"{len(self.failures)} failures, max deviation {self.max_deviation:.3g}"
        )

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "instances_run": self.instances_run,
            "skipped": self.skipped,
            "seed": self.seed,
            "max_deviation": _num(self.max_deviation),
            "tolerances": {k: _num(v) for k, v in self.tolerances.items()},
            "failures": self.failures,
            "details": self.details,
        }

    @classmethod
    def from_json(cls, data: dict) -> CheckReport:
        return cls(
            data["name"],
            int(data["instances_run"]),
            list(data["failures"]),
            _unnum(data["max_deviation"]),
            {k: _unnum(v) for k, v in data["tolerances"].items()},
            int(data["skipped"]),
            data.get("seed"),
            dict(data.get("details", {})),
        )


def _num(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else ("inf" if x > 0 else "-inf" if x < 0 else "nan")


def _unnum(x) -> float:
    return float(x)


def torus_payload(inst: TorusInstance, **extra) -> dict:
    """A standalone instance file (plus context) reproducing the instance."""
    return {
        "name": inst.name,
        "file": {
            "version": FORMAT_VERSION,
            "rep": repspec_to_json(inst.spec),
            "points": {"x": torus_point_to_json(inst.point)},
        },
        **extra,
    }


def sl2_payload(inst: SL2Instance, **extra) -> dict:
    return {
        "name": inst.name,
        "file": {
            "version": FORMAT_VERSION,
            "hermitian": {"su2": {"E": list(inst.E), "V": list(inst.V)}},
            "points": {"x": {"E": cvec_to_json(inst.m), "V": cvec_to_json(inst.v)}},
        },
        **extra,
    }


def worker_count() -> int:
    raw = os.environ.get(THREADS_ENV)
    cpus = os.cpu_count() or 1
    if raw is None or raw == "":
        return cpus
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ValueError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return min(n, cpus)


def parallel_map(fn: Callable, items: Sequence) -> list:
    """Ordered map over worker processes (serial when one worker is allowed)."""
    items = list(items)
    workers = min(worker_count(), len(items))
    if workers <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * workers))))
