"""Tabular experiment reports with pass/fail checks and CSV serialization."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from . import __version__


@dataclass
class Check:
    name: str
    passed: bool | None  # None marks an inconclusive check
    detail: str = ""

    @property
    def verdict(self):
        return {True: "PASS", False: "FAIL", None: "INCONCLUSIVE"}[self.passed]


@dataclass
class ExperimentReport:
    """Rows of measured and reference values plus the checks they support.

    ``columns`` is a list of ``(name, unit)`` pairs; rows are dicts keyed by
    column name.  The manifest line is the only place a timestamp appears.
    """

    name: str
    columns: list
    rows: list = field(default_factory=list)
    manifest: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)

    def add_row(self, **values):
        self.rows.append(values)

    def add_check(self, name, passed, detail=""):
        check = Check(name, None if passed is None else bool(passed), detail)
        self.checks.append(check)
        return check

    @property
    def passed(self):
        return all(c.passed is True for c in self.checks)

    def column(self, name):
        return [row.get(name) for row in self.rows]

    def verdict_lines(self):
        return [f"{c.name} {c.verdict}" + (f" ({c.detail})" if c.detail else "") for c in self.checks]

    def header(self):
        return [f"{n}[{u}]" if u else n for n, u in self.columns]

    def body_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.header())
        for row in self.rows:
            writer.writerow([_fmt(row.get(n)) for n, _ in self.columns])
        return buf.getvalue()

    def to_csv(self, path, timestamp=True):
        manifest = dict(self.manifest, report=self.name, tool_version=__version__)
        if timestamp:
            manifest["timestamp"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
        with open(path, "w", newline="") as fh:
            fh.write("# manifest: " + json.dumps(manifest, sort_keys=True, default=_jsonable) + "\n")
            fh.write(self.body_csv())
        return path


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value) if math.isfinite(value) else str(value)
    if isinstance(value, (tuple, list)):
        return " ".join(_fmt(v) for v in value)
    return str(value)


def _jsonable(obj):
    try:
        return obj.tolist()
    except AttributeError:
        return str(obj)
