"""Verification report: deterministic JSON and a markdown summary."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any

SCHEMA_VERSION = 1


@dataclass
class Row:
    """Reduction of one identity over the sample points."""

    max_residual: float
    worst_point: list[float]
    tolerance: float
    statement: str
    passed: bool = field(init=False)

    def __post_init__(self):
        self.passed = bool(self.max_residual <= self.tolerance)

    def to_dict(self) -> dict:
        return {
            "max_residual": float(self.max_residual),
            "worst_point": [float(x) for x in self.worst_point],
            "tolerance": float(self.tolerance),
            "statement": self.statement,
            "pass": self.passed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Row":
        return cls(d["max_residual"], list(d["worst_point"]), d["tolerance"], d["statement"])


@dataclass
class Report:
    suites: dict[str, dict[str, Row]] = field(default_factory=dict)
    verdict: dict[str, Any] | None = None
    tangent_verdict: dict[str, Any] | None = None
    classification: dict[str, Any] = field(default_factory=dict)
    expectations: dict[str, dict[str, bool]] = field(default_factory=dict)
    environment: dict[str, Any] = field(default_factory=dict)
    skipped: int = 0

    @property
    def identities_passed(self) -> bool:
        return all(r.passed for rows in self.suites.values() for r in rows.values())

    @property
    def expectations_passed(self) -> bool:
        return all(e["pass"] for e in self.expectations.values())

    @property
    def passed(self) -> bool:
        return self.identities_passed and self.expectations_passed

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "pass": self.passed,
            "suites": {s: {k: r.to_dict() for k, r in rows.items()} for s, rows in self.suites.items()},
            "verdict": self.verdict,
            "tangent_verdict": self.tangent_verdict,
            "classification": self.classification,
            "expectations": self.expectations,
            "environment": self.environment,
            "skipped": int(self.skipped),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Report":
        if d.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema version {d.get('schema_version')!r}")
        return cls(
            suites={s: {k: Row.from_dict(r) for k, r in rows.items()} for s, rows in d["suites"].items()},
            verdict=d["verdict"],
            tangent_verdict=d["tangent_verdict"],
            classification=d["classification"],
            expectations=d["expectations"],
            environment=d["environment"],
            skipped=d["skipped"],
        )


# -- JSON ------------------------------------------------------------------------------------

def _number(x: float) -> str:
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    s = format(x, ".17g")
    # keep integral values parseable as floats
    return s if any(ch in s for ch in ".e") else s + ".0"


def _encode(obj: Any, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return _number(obj)
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k), ensure_ascii=False)}: {_encode(obj[k], indent, level + 1)}"
                 for k in sorted(obj, key=str)]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + _encode(v, indent, level + 1) for v in obj) + "\n" + end + "]"
    if hasattr(obj, "item"):
        return _encode(obj.item(), indent, level)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def to_json(report: Report, indent: int = 2) -> str:
    """Keys sorted, floats with 17 significant digits."""
    return _encode(report.to_dict(), indent, 0) + "\n"


def from_json(text: str) -> Report:
    return Report.from_dict(json.loads(text))


# -- markdown ----------------------------------------------------------------------------------

def _fmt(x: float) -> str:
    return f"{x:.2e}"


def to_markdown(report: Report) -> str:
    env = report.environment
    lines = [
        "# Phase-structure verification report",
        "",
        f"- metric: `{env.get('metric')}` {env.get('metric_params', {})}",
        f"- connection: `{env.get('connection')}`",
        f"- perturbation: `{env.get('perturbation')}`",
        f"- constants: {env.get('constants')}",
        f"- samples: {env.get('samples')} (seed {env.get('seed')}), skipped: {report.skipped}",
        f"- config sha256: `{env.get('config_hash')}`",
        f"- overall: {'PASS' if report.passed else 'FAIL'}",
        "",
        "## Concordance",
        "",
        "| suite | identity | statement | max residual | tolerance | pass |",
        "|---|---|---|---|---|---|",
    ]
    for suite in sorted(report.suites):
        for name in sorted(report.suites[suite]):
            r = report.suites[suite][name]
            mark = "✓" if r.passed else "✗"
            lines.append(f"| {suite} | `{name}` | {r.statement} | {_fmt(r.max_residual)} | "
                         f"{_fmt(r.tolerance)} | {mark} |")
    if report.verdict is not None:
        v = report.verdict
        lines += ["", "## Phase structure verdict", "", "| flag | value |", "|---|---|"]
        lines += [f"| {k} | {v['flags'][k]} |" for k in sorted(v["flags"])]
        lines.append(f"| groups coherent | {v['groups_coherent']} |")
    if report.tangent_verdict is not None:
        t = report.tangent_verdict
        lines += ["", "## Tangent structure verdict", "", "| flag | value |", "|---|---|"]
        lines += [f"| {k} | {t['flags'][k]} |" for k in sorted(t["flags"])]
    if report.classification:
        lines += ["", "## Perturbation classification", ""]
        lines += [f"- {k}: {report.classification[k]}" for k in sorted(report.classification)]
    if report.expectations:
        lines += ["", "## Expectations", "", "| flag | expected | actual | pass |", "|---|---|---|---|"]
        for k in sorted(report.expectations):
            e = report.expectations[k]
            lines.append(f"| {k} | {e['expected']} | {e['actual']} | {'✓' if e['pass'] else '✗'} |")
    return "\n".join(lines) + "\n"


def emit(report: Report, fmt: str = "json") -> str:
    if fmt == "json":
        return to_json(report)
    if fmt == "markdown":
        return to_markdown(report)
    raise ValueError(f"unknown format {fmt!r}")
