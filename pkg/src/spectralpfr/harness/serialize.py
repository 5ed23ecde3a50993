"""Versioned JSON reports and the CSV ledger export.

Exact rationals are written as ``"p/q"`` strings, non-finite floats as
``"inf"``, ``"-inf"`` or ``"nan"``.  Fields declared with ``repr=False`` on a
dataclass (bulk arrays) are left out of reports.
"""
from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

import numpy as np

from ..groups import GroupSpec, QuotientMap, Subgroup

SCHEMA = "spectralpfr.report"
SCHEMA_VERSION = 1
_RATIONAL = re.compile(r"^-?\d+/\d+$")


def rational(q: Fraction | int) -> str:
    q = Fraction(q)
    return f"{q.numerator}/{q.denominator}"


def parse_rational(text: str) -> Fraction:
    if not _RATIONAL.match(text):
        raise ValueError(f"not a p/q rational: {text!r}")
    return Fraction(text)


def to_jsonable(obj: Any) -> Any:
    if obj is None or isinstance(obj, (bool, str)):
        return obj
    if isinstance(obj, Fraction):
        return rational(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isfinite(x):
            return x
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    if isinstance(obj, (complex, np.complexfloating)):
        return [to_jsonable(obj.real), to_jsonable(obj.imag)]
    if isinstance(obj, GroupSpec):
        return str(obj)
    if isinstance(obj, Subgroup):
        return {"order": obj.order, "index": obj.index,
                "generators": [list(g) for g in obj.generators]}
    if isinstance(obj, QuotientMap):
        return {"image": str(obj.image), "kernel_order": obj.kernel.order}
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj) if f.repr}
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, set, frozenset)):
        items = sorted(obj) if isinstance(obj, (set, frozenset)) else obj
        return [to_jsonable(v) for v in items]
    raise TypeError(f"cannot serialise {type(obj).__name__}")


@dataclass
class Report:
    kind: str
    config: dict
    artifacts: dict = field(default_factory=dict)
    findings: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    timing: dict = field(default_factory=dict)
    version: int = SCHEMA_VERSION

    def to_dict(self) -> dict:
        return {"schema": SCHEMA, "version": self.version, "kind": self.kind,
                "config": to_jsonable(self.config), "summary": to_jsonable(self.summary),
                "artifacts": to_jsonable(self.artifacts), "findings": to_jsonable(self.findings),
                "timing": to_jsonable(self.timing)}

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def findings_json(self) -> str:
        """The findings array alone; the replay-determinism surface."""
        return json.dumps(to_jsonable(self.findings), sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "Report":
        if data.get("schema") != SCHEMA:
            raise ValueError(f"not a {SCHEMA} document")
        if data.get("version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported report version {data.get('version')}")
        return cls(data["kind"], data["config"], data.get("artifacts", {}), data.get("findings", []),
                   data.get("summary", {}), data.get("timing", {}), data["version"])

    @classmethod
    def loads(cls, text: str) -> "Report":
        return cls.from_dict(json.loads(text))


LEDGER_COLUMNS = ("j", "group", "order", "K", "alpha", "I", "codim", "log_index", "outcome", "delta")
FINDING_COLUMNS = ("lemma", "severity", "group", "set", "measured", "note")


def _traces(report: Report):
    art = to_jsonable(report.artifacts)
    if "trace" in art:
        yield "", art["trace"]
    for name, sub in sorted(art.get("variants", {}).items()):
        if "trace" in sub:
            yield name, sub["trace"]


def to_csv(report: Report) -> str:
    """``(K_j, alpha_j, I_j)`` ledger rows for traced reports, finding rows otherwise."""
    buf = io.StringIO()
    traces = list(_traces(report))
    if traces:
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("variant",) + LEDGER_COLUMNS)
        for name, tr in traces:
            for step in tr["steps"]:
                w.writerow([name] + [_cell(step.get(c)) for c in LEDGER_COLUMNS])
        return buf.getvalue()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(FINDING_COLUMNS)
    for f in to_jsonable(report.findings):
        w.writerow([_cell(f.get(c)) for c in FINDING_COLUMNS])
    return buf.getvalue()


def _cell(v):
    if isinstance(v, (dict, list)):
        return json.dumps(v, sort_keys=True)
    return "" if v is None else v
