"""Deterministic CSV + JSON report files."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


def to_plain(obj):
    """Convert numpy scalars, tuples and non-string keys into JSON-ready data."""
    if isinstance(obj, dict):
        return {_key(k): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def _key(k):
    if isinstance(k, tuple):
        return "(" + ",".join(str(v) for v in k) + ")"
    return str(k)


def _cell(v):
    v = to_plain(v)
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, list):
        return " ".join(str(_cell(x)) for x in v)
    return str(v)


@dataclass
class Report:
    """A table of rows plus a summary; ``passed`` drives the exit status."""

    name: str
    rows: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    passed: bool = True

    def columns(self):
        cols = []
        for row in self.rows:
            for k in row:
                if k not in cols:
                    cols.append(k)
        return cols

    def sorted_rows(self):
        return sorted(self.rows, key=lambda r: json.dumps(to_plain(r.get("case", r)), sort_keys=True))

    def write(self, directory) -> tuple[Path, Path]:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        csv_path = directory / f"{self.name}.csv"
        json_path = directory / f"{self.name}.json"
        cols = self.columns()
        with open(csv_path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(cols)
            for row in self.sorted_rows():
                w.writerow([_cell(row.get(c, "")) for c in cols])
        payload = {"name": self.name, "passed": bool(self.passed), "summary": to_plain(self.summary), "rows": len(self.rows)}
        json_path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")
        return csv_path, json_path
