"""Check records and scenario reports with JSON/CSV output."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import OUTPUT_FORMATS
from .errors import ConfigError

CSV_COLUMNS = ("scenario_id", "check", "t_re", "t_im", "value", "tolerance", "pass")


def plain(obj):
    """Convert numpy scalars/arrays and complex numbers into JSON-ready values."""
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return plain(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


@dataclass
class CheckRecord:
    check: str
    t: list[complex] | None
    value: float
    tolerance: float
    passed: bool
    detail: str = ""
    extra: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "check": self.check,
            "t": None if self.t is None else plain([complex(x) for x in self.t]),
            "value": float(self.value),
            "tolerance": float(self.tolerance),
            "pass": bool(self.passed),
            "detail": self.detail,
            "extra": plain(self.extra),
        }


@dataclass
class Report:
    scenario_id: str
    config_hash: str
    code_version: str
    records: list[CheckRecord] = field(default_factory=list)
    quadrature: list[dict] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.records)

    @property
    def failed_count(self) -> int:
        return sum(1 for r in self.records if not r.passed)

    def add(
        self,
        check: str,
        t,
        value: float,
        tolerance: float,
        passed: bool,
        detail: str = "",
        **extra,
    ) -> CheckRecord:
        point = None if t is None else [complex(x) for x in np.atleast_1d(t)]
        record = CheckRecord(check, point, float(value), float(tolerance), bool(passed), detail, extra)
        self.records.append(record)
        return record

    def to_dict(self) -> dict:
        return {
            "provenance": {
                "scenario_id": self.scenario_id,
                "config_hash": self.config_hash,
                "code_version": self.code_version,
                "quadrature": plain(self.quadrature),
            },
            "records": [r.as_dict() for r in self.records],
            "passed": self.passed,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for r in self.records:
            if r.t is None:
                t_re = t_im = ""
            else:
                t_re = ";".join(repr(float(x.real)) for x in r.t)
                t_im = ";".join(repr(float(x.imag)) for x in r.t)
            writer.writerow([
                self.scenario_id, r.check, t_re, t_im,
                repr(float(r.value)), repr(float(r.tolerance)), str(r.passed).lower(),
            ])
        return buf.getvalue()

    def save(self, path: Path, fmt: str = "json") -> None:
        if fmt not in OUTPUT_FORMATS:
            raise ConfigError(f"Unknown output format: {fmt!r}")
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_json() if fmt == "json" else self.to_csv())
