"""Verification records and their JSON-lines / CSV serialization."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any


def _plain(v: Any) -> Any:
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in sorted(v.items(), key=lambda kv: str(kv[0]))}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, float):
        return float(f"{v:.12g}")
    return v


@dataclass
class VerificationReport:
    claim: str
    mode: str  # "exact" or "mc"
    params: dict = field(default_factory=dict)
    value: Any = None
    bound: Any = None
    ci_low: float | None = None
    ci_high: float | None = None
    passed: bool = False
    detail: str = ""

    def record(self) -> dict:
        return {
            "claim": self.claim,
            "mode": self.mode,
            "params": _plain(self.params),
            "value": _plain(self.value),
            "bound": _plain(self.bound),
            "ci_low": _plain(self.ci_low),
            "ci_high": _plain(self.ci_high),
            "pass": bool(self.passed),
            "detail": self.detail,
        }

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        ci = ""
        if self.ci_low is not None:
            ci = f" ci=[{self.ci_low:.4g},{self.ci_high:.4g}]"
        return f"{status} {self.claim} [{self.mode}] value={_plain(self.value)} bound={_plain(self.bound)}{ci}"


FIELDS = ["claim", "mode", "params", "value", "bound", "ci_low", "ci_high", "pass"]


def to_jsonl(reports: list[VerificationReport]) -> str:
    return "".join(json.dumps(r.record(), sort_keys=True) + "\n" for r in reports)


def to_csv(reports: list[VerificationReport]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=FIELDS, lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for r in reports:
        rec = r.record()
        rec["params"] = json.dumps(rec["params"], sort_keys=True)
        w.writerow(rec)
    return buf.getvalue()
