"""Uniform result record for every check."""

from __future__ import annotations

import time
from contextlib import contextmanager
from dataclasses import dataclass, field


@dataclass
class Report:
    check: str
    family: str
    params: dict
    status: str = "pass"
    defect_terms: int = 0
    elapsed_ms: int = 0
    mode: str = "coefficient-wise"
    seed: int | None = None
    details: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status == "pass"

    def add_defects(self, n: int, where: str | None = None) -> None:
        if n:
            self.defect_terms += n
            self.status = "fail"
            if where is not None:
                self.details.setdefault("failures", []).append(where)

    def fail(self, why: str) -> None:
        self.status = "fail"
        self.details.setdefault("failures", []).append(why)

    def to_json(self, timing: bool = True) -> dict:
        out = {
            "check": self.check,
            "family": self.family,
            "params": self.params,
            "status": self.status,
            "defect_terms": self.defect_terms,
            "mode": self.mode,
        }
        out["elapsed_ms"] = self.elapsed_ms if timing else 0
        if self.seed is not None:
            out["seed"] = self.seed
        if self.details:
            out["details"] = self.details
        return out


@contextmanager
def timed(report: Report):
    t0 = time.perf_counter()
    try:
        yield report
    finally:
        report.elapsed_ms = int((time.perf_counter() - t0) * 1000)
