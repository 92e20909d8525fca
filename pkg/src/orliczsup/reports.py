"""Tabular experiment reports with deterministic CSV/JSON serialization.

Floats are formatted with Python's shortest round-trip repr, so identical
runs produce byte-identical files.
"""

import csv
import json
from dataclasses import dataclass, field

__all__ = ["Assertion", "ConvergenceReport"]


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


@dataclass
class Assertion:
    """One named pass/fail line of an experiment."""

    name: str
    passed: bool
    detail: str = ""

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        suffix = f" ({self.detail})" if self.detail else ""
        return f"{status}  {self.name}{suffix}"


@dataclass
class ConvergenceReport:
    """Per-row experiment records plus the assertions evaluated on them."""

    kind: str
    columns: list
    rows: list = field(default_factory=list)
    assertions: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def add_row(self, *values):
        if len(values) != len(self.columns):
            raise ValueError("row width does not match the declared columns")
        # numpy scalars carry their own repr; normalize to builtins so the
        # shortest round-trip formatting applies
        self.rows.append(tuple(v.item() if hasattr(v, "item") else v
                               for v in values))

    def add_assertion(self, name, passed, detail=""):
        self.assertions.append(Assertion(name, bool(passed), detail))

    def column(self, name):
        i = self.columns.index(name)
        return [row[i] for row in self.rows]

    @property
    def all_passed(self):
        return all(a.passed for a in self.assertions)

    def summary_lines(self):
        return [a.line() for a in self.assertions]

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.columns)
            for row in self.rows:
                w.writerow([_fmt(v) for v in row])

    def to_json(self, path=None):
        doc = {
            "kind": self.kind,
            "columns": list(self.columns),
            "rows": [list(r) for r in self.rows],
            "assertions": [
                {"name": a.name, "passed": a.passed, "detail": a.detail}
                for a in self.assertions
            ],
            "meta": self.meta,
        }
        if path is None:
            return doc
        with open(path, "w") as fh:
            json.dump(doc, fh, indent=1)

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            doc = json.load(fh)
        report = cls(doc["kind"], doc["columns"],
                     [tuple(r) for r in doc["rows"]], meta=doc.get("meta", {}))
        for a in doc.get("assertions", []):
            report.add_assertion(a["name"], a["passed"], a.get("detail", ""))
        return report
