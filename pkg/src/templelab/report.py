"""Estimate reports and deterministic serialization.

JSON is written UTF-8 with sorted keys, two-space indent and a ``schema_version``
field. Floats are written by ``repr`` (shortest round-trip form); non-finite
values become the strings ``"inf"``, ``"-inf"`` and ``"nan"``.

CSV files have a header row, comma separators and floats in ``%.17g`` form.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence

import numpy as np

SCHEMA_VERSION = 1


def fmt(x) -> str:
    """Format a number with 17 significant digits."""
    return format(float(x), ".17g")


def plain(obj: Any) -> Any:
    """Convert numpy scalars/arrays and dataclass-ish objects into JSON-safe values."""
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [plain(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if obj is None or isinstance(obj, str):
        return obj
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj: Any) -> str:
    return json.dumps(plain(obj), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def write_json(path, obj: Any) -> None:
    payload = dict(obj)
    payload.setdefault("schema_version", SCHEMA_VERSION)
    Path(path).write_text(dumps(payload), encoding="utf-8")


def write_csv(path, header: Sequence[str], columns: Sequence[Sequence[float]]) -> None:
    """Write equal-length columns; shorter columns are padded with empty cells."""
    length = max((len(c) for c in columns), default=0)
    lines = [",".join(header)]
    for k in range(length):
        lines.append(",".join(fmt(c[k]) if k < len(c) else "" for c in columns))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


@dataclass
class EstimateReport:
    name: str
    scalars: Dict[str, Any] = field(default_factory=dict)
    series: Dict[str, List[float]] = field(default_factory=dict)
    fit: Optional[Dict[str, Any]] = None
    threshold: Dict[str, Any] = field(default_factory=dict)
    passed: bool = True

    def to_dict(self) -> dict:
        return plain({
            "schema_version": SCHEMA_VERSION,
            "name": self.name,
            "scalars": self.scalars,
            "series": self.series,
            "fit": self.fit,
            "threshold": self.threshold,
            "pass": bool(self.passed),
        })

    def to_json(self) -> str:
        return dumps(self.to_dict())

    def write(self, out_dir) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(self.to_json(), encoding="utf-8")
        names = sorted(self.series)
        write_csv(out / "series.csv", names, [self.series[k] for k in names])

    @staticmethod
    def merge(name: str, parts: Iterable["EstimateReport"]) -> "EstimateReport":
        """Combine sub-reports; scalars and series are prefixed with the part name."""
        merged = EstimateReport(name=name)
        for part in sorted(parts, key=lambda p: p.name):
            for k, v in part.scalars.items():
                merged.scalars[f"{part.name}.{k}"] = v
            for k, v in part.series.items():
                merged.series[f"{part.name}.{k}"] = v
            for k, v in part.threshold.items():
                merged.threshold[f"{part.name}.{k}"] = v
            if part.fit is not None:
                merged.scalars[f"{part.name}.fit"] = part.fit
            merged.scalars[f"{part.name}.pass"] = bool(part.passed)
            merged.passed = merged.passed and part.passed
        return merged
