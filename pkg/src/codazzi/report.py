"""Check rows, verification reports and their text/json/csv forms."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field

import numpy as np

FORMATS = ("text", "json", "csv")


@dataclass
class CheckResult:
    """One named residual check aggregated over a set of sample points.

    ``relation`` is ``"<="`` when the maximum must stay within ``tolerance``
    and ``">="`` when it must reach it (negative controls, lower bounds).
    """

    check_id: str
    anchor: str
    max_residual: float
    mean_residual: float
    tolerance: float
    argmax: list[float] | None
    passed: bool
    relation: str = "<="
    note: str = ""


def residual_row(check_id, values, points=None, tolerance=0.0, anchor="", relation="<=", note=""):
    """Aggregate per-point residuals into a :class:`CheckResult`.

    The argmax is the first maximal point in the given order.
    """
    vals = np.asarray(values, dtype=float).reshape(-1)
    if vals.size == 0:
        raise ValueError(f"{check_id}: no sample values")
    finite = np.isfinite(vals)
    if finite.all():
        idx = int(np.argmax(vals))
        vmax = float(vals[idx])
        vmean = float(vals.mean())
    else:
        idx = int(np.argmin(finite))
        vmax = float("inf") if np.isposinf(vals).any() else float("nan")
        vmean = vmax
    argmax = None
    if points is not None:
        pts = np.asarray(points, dtype=float).reshape(len(vals), -1)
        argmax = [float(x) for x in pts[idx]]
    if relation == "<=":
        passed = bool(vmax <= tolerance)
    elif relation == ">=":
        passed = bool(vmax >= tolerance)
    else:
        raise ValueError(f"unknown relation {relation!r}")
    return CheckResult(check_id, anchor, vmax, vmean, float(tolerance), argmax, passed, relation, note)


@dataclass
class VerificationReport:
    scenario: str
    checks: list[CheckResult] = field(default_factory=list)
    runtime: float = 0.0
    scheme: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def failures(self):
        return [c for c in self.checks if not c.passed]

    def extend(self, rows, prefix=""):
        for r in rows:
            if prefix:
                r.check_id = f"{prefix}.{r.check_id}"
            self.checks.append(r)

    def to_dict(self):
        return {"scenario": self.scenario, "passed": self.passed, "runtime": self.runtime,
                "scheme": dict(self.scheme), "checks": [asdict(c) for c in self.checks]}

    @classmethod
    def from_dict(cls, data):
        checks = [CheckResult(**c) for c in data["checks"]]
        return cls(data["scenario"], checks, float(data["runtime"]), dict(data.get("scheme", {})))


def _fmt(x):
    return f"{x:.2e}" if np.isfinite(x) else str(x)


def serialize_report(report: VerificationReport, fmt="text") -> str:
    if fmt == "json":
        return json.dumps(report.to_dict(), indent=2)
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["check_id", "anchor", "max_residual", "mean_residual", "relation",
                    "tolerance", "argmax", "passed", "note"])
        for c in report.checks:
            arg = "" if c.argmax is None else " ".join(repr(x) for x in c.argmax)
            w.writerow([c.check_id, c.anchor, repr(c.max_residual), repr(c.mean_residual),
                        c.relation, repr(c.tolerance), arg, c.passed, c.note])
        return buf.getvalue()
    if fmt != "text":
        raise ValueError(f"unknown format {fmt!r}; choose from {FORMATS}")
    width = max([len(c.check_id) for c in report.checks] + [8])
    lines = [f"scenario: {report.scenario}",
             "scheme:   " + ", ".join(f"{k}={v}" for k, v in report.scheme.items()),
             "",
             f"{'check':<{width}}  {'max':>9}  {'mean':>9}  rel {'tol':>9}  verdict",
             "-" * (width + 46)]
    for c in report.checks:
        verdict = "pass" if c.passed else "FAIL  <<<"
        lines.append(f"{c.check_id:<{width}}  {_fmt(c.max_residual):>9}  {_fmt(c.mean_residual):>9}"
                     f"  {c.relation:<3} {_fmt(c.tolerance):>9}  {verdict}")
    lines.append("-" * (width + 46))
    nfail = len(report.failures())
    lines.append(f"overall: {'PASS' if report.passed else 'FAIL'} "
                 f"({len(report.checks) - nfail}/{len(report.checks)} checks passed, "
                 f"{report.runtime:.2f} s)")
    return "\n".join(lines) + "\n"


def parse_report(text: str) -> VerificationReport:
    """Inverse of ``serialize_report(r, "json")``."""
    return VerificationReport.from_dict(json.loads(text))
