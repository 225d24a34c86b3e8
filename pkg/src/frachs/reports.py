"""Report types and the JSON/CSV writers."""

import csv
import json
import logging
import math
import os
from dataclasses import asdict, dataclass, field, is_dataclass

import numpy as np

from .infrastructure.config import SCHEMA_VERSION

log = logging.getLogger(__name__)


@dataclass
class Check:
    name: str
    passed: bool
    value: object = None
    threshold: object = None
    detail: str = ""


@dataclass
class Report:
    experiment: str
    seed: int
    params: dict
    settings: dict
    checks: list = field(default_factory=list)
    tables: dict = field(default_factory=dict)
    series: dict = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def check(self, name, passed, value=None, threshold=None, detail=""):
        self.checks.append(Check(name, bool(passed), value, threshold, detail))
        log.info("check %-40s %s (value=%s, threshold=%s)", name, "pass" if passed else "FAIL", value, threshold)
        return bool(passed)

    def add_table(self, name, rows):
        self.tables[name] = [dict(row) for row in rows]

    def add_series(self, name, columns):
        """``columns`` maps header -> equal-length sequence."""
        lengths = {len(v) for v in columns.values()}
        if len(lengths) > 1:
            raise ValueError(f"series {name!r} has columns of different lengths {sorted(lengths)}")
        self.series[name] = {k: list(v) for k, v in columns.items()}

    def as_dict(self):
        return {
            "schema_version": self.schema_version,
            "experiment": self.experiment,
            "seed": self.seed,
            "passed": self.passed,
            "params": self.params,
            "settings": self.settings,
            "checks": [asdict(c) for c in self.checks],
            "tables": self.tables,
            "series": sorted(self.series),
        }


def plain(value):
    """Recursively convert numpy and dataclass values into JSON-safe objects.

    Non-finite floats become the strings ``"nan"``, ``"inf"``, ``"-inf"``.
    """
    if is_dataclass(value) and not isinstance(value, type):
        return plain(asdict(value))
    if isinstance(value, dict):
        return {str(k): plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [plain(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        x = float(value)
        if math.isfinite(x):
            return x
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    return value


def write_report(report, out_dir):
    """Write ``<experiment>.json`` and one ``<experiment>-<series>.csv`` per series."""
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    json_path = os.path.join(out_dir, f"{report.experiment}.json")
    with open(json_path, "w") as f:
        json.dump(plain(report.as_dict()), f, indent=2, sort_keys=False)
        f.write("\n")
    paths.append(json_path)
    for name, columns in report.series.items():
        csv_path = os.path.join(out_dir, f"{report.experiment}-{name}.csv")
        headers = list(columns)
        with open(csv_path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(headers)
            for row in zip(*(columns[h] for h in headers)):
                writer.writerow([_cell(v) for v in row])
        paths.append(csv_path)
    log.debug("report files: %s", paths)
    return paths


def _cell(value):
    value = plain(value)
    if isinstance(value, float):
        return repr(value)
    return value
