"""Check records, suite reports and deterministic serialization."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

import numpy as np

PASS = "pass"
FAIL = "fail"
PREMISE = "premise_not_met"


def _plain(x):
    """Convert numpy scalars/arrays to plain Python values."""
    if x is None or isinstance(x, (str, bool)):
        return x
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return float(x)
    if isinstance(x, np.ndarray):
        return [_plain(v) for v in x.tolist()] if x.ndim else _plain(x.item())
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    return x


@dataclass
class CheckResult:
    """A named residual record; ``pass`` holds iff residual <= tolerance."""

    name: str
    lhs: Any
    rhs: Any
    residual: float | None
    tolerance: float
    status: str
    informational: bool = False
    sample: int | None = None
    context: dict = field(default_factory=dict)
    note: str | None = None

    @classmethod
    def make(cls, name: str, lhs, rhs, residual: float, tolerance: float, **kw) -> "CheckResult":
        residual = float(residual)
        ok = residual <= tolerance  # NaN compares False and therefore fails
        return cls(name, _plain(lhs), _plain(rhs), residual, float(tolerance), PASS if ok else FAIL, **kw)

    @classmethod
    def premise(cls, name: str, tolerance: float, reason: str, **kw) -> "CheckResult":
        return cls(name, None, None, None, float(tolerance), PREMISE, note=reason, **kw)

    @property
    def passed(self) -> bool:
        return self.status == PASS

    @property
    def failed(self) -> bool:
        return self.status == FAIL

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "sample": self.sample,
            "status": self.status,
            "informational": self.informational,
            "residual": self.residual,
            "tolerance": self.tolerance,
            "lhs": _plain(self.lhs),
            "rhs": _plain(self.rhs),
            "context": _plain(self.context),
            "note": self.note,
        }


@dataclass
class VerificationReport:
    """Results of one suite on one scenario."""

    scenario_id: str
    suite: str
    results: list[CheckResult] = field(default_factory=list)
    engine: str = ""
    tolerance: float = 0.0
    seed: int = 0
    premise: str | None = None
    metadata: dict = field(default_factory=dict)

    def add(self, result: CheckResult) -> CheckResult:
        self.results.append(result)
        return result

    def extend(self, results: Iterable[CheckResult]) -> None:
        self.results.extend(results)

    @property
    def summary(self) -> dict:
        counts = {PASS: 0, FAIL: 0, PREMISE: 0, "informational": 0}
        for r in self.results:
            counts[r.status] += 1
            counts["informational"] += int(r.informational)
        return counts

    @property
    def ok(self) -> bool:
        """True iff no non-informational check failed."""
        return not any(r.failed and not r.informational for r in self.results)

    def by_name(self, name: str) -> list[CheckResult]:
        return [r for r in self.results if r.name == name]

    def worst(self, name: str) -> CheckResult | None:
        """Worst record of a check: failures first, then largest residual."""
        rs = self.by_name(name)
        if not rs:
            return None
        def key(r):
            res = -1.0 if r.residual is None or math.isnan(r.residual) else r.residual
            return ({FAIL: 2, PASS: 1, PREMISE: 0}[r.status], res)
        return max(rs, key=key)

    def names(self) -> list[str]:
        return list(dict.fromkeys(r.name for r in self.results))

    def sorted_results(self) -> list[CheckResult]:
        return sorted(self.results, key=lambda r: (r.name, -1 if r.sample is None else r.sample))

    def as_dict(self) -> dict:
        s = self.summary
        return {
            "suite": self.suite,
            "scenario": self.scenario_id,
            "engine": self.engine,
            "tolerance": self.tolerance,
            "seed": self.seed,
            "premise": self.premise,
            "ok": self.ok,
            "summary": {"pass": s[PASS], "fail": s[FAIL], "premise_not_met": s[PREMISE],
                        "informational": s["informational"]},
            "metadata": _plain(self.metadata),
            "results": [r.as_dict() for r in self.sorted_results()],
        }


# serialization -------------------------------------------------------------------

def _fmt_float(x: float) -> str:
    if math.isnan(x) or math.isinf(x):
        return "null"
    s = format(x, ".17g")
    if s in ("-0",):
        s = "0"
    return s


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON with stable key order and 17-significant-digit floats."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, np.ndarray):
        return dumps(obj.tolist(), indent, _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float, np.floating, np.integer)) and not isinstance(v, bool) or v is None
               for v in obj):
            return "[" + ", ".join(dumps(v, indent, _level + 1) for v in obj) + "]"
        items = [pad + dumps(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _fmt_num(x) -> str:
    if x is None:
        return "-"
    return f"{x:.3e}"


def format_table(reports: Sequence[VerificationReport]) -> str:
    """Aligned text table, one row per check name (worst sample shown)."""
    rows = [("suite", "check", "residual", "tol", "status", "samples")]
    for rep in reports:
        if rep.premise and not rep.results:
            rows.append((rep.suite, "(suite)", "-", "-", "PREMISE NOT MET", "0"))
            continue
        for name in rep.names():
            w = rep.worst(name)
            status = {PASS: "PASS", FAIL: "FAIL", PREMISE: "PREMISE NOT MET"}[w.status]
            if w.informational:
                status += " (info)"
            rows.append((rep.suite, name, _fmt_num(w.residual), _fmt_num(w.tolerance), status,
                         str(len(rep.by_name(name)))))
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    lines = []
    for k, r in enumerate(rows):
        lines.append("  ".join(c.ljust(widths[i]) for i, c in enumerate(r)).rstrip())
        if k == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines)
