"""Experiment reports and their json/csv/text renderings."""
from dataclasses import dataclass, field, asdict
import csv
import io
import json
import math

FORMATS = ("json", "csv", "text")
CSV_COLUMNS = ("suite", "name", "anchor", "value", "tolerance", "verdict")


def _clean(x):
    """Plain-Python, JSON-safe copy (numpy scalars and arrays, complex, non-finite floats)."""
    if hasattr(x, "tolist"):
        x = x.tolist()
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, complex):
        return [_clean(x.real), _clean(x.imag)]
    if isinstance(x, float) and not math.isfinite(x):
        return repr(x)
    return x


@dataclass
class CheckRecord:
    """One certified inequality or identity: passes iff ``value >= -tolerance``."""

    suite: str
    name: str
    anchor: str
    value: float
    tolerance: float
    info: dict = field(default_factory=dict)

    @property
    def verdict(self):
        return "pass" if self.value >= -self.tolerance else "fail"

    def to_dict(self):
        d = asdict(self)
        d["value"] = _clean(float(self.value))
        d["info"] = _clean(self.info)
        d["verdict"] = self.verdict
        return d

    @classmethod
    def from_dict(cls, d):
        value = d["value"]
        value = float(value) if isinstance(value, str) else value
        return cls(d["suite"], d["name"], d["anchor"], value, d["tolerance"], d.get("info", {}))


@dataclass
class ExperimentReport:
    config: dict
    seed: int
    version: str
    checks: list = field(default_factory=list)
    tables: dict = field(default_factory=dict)
    wall_clock: float = None

    @property
    def passed(self):
        return all(c.verdict == "pass" for c in self.checks)

    def to_dict(self):
        return {
            "config": _clean(self.config),
            "seed": self.seed,
            "version": self.version,
            "verdict": "pass" if self.passed else "fail",
            "checks": [c.to_dict() for c in self.checks],
            "tables": _clean(self.tables),
            "wall_clock": self.wall_clock,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            config=d["config"],
            seed=d["seed"],
            version=d["version"],
            checks=[CheckRecord.from_dict(c) for c in d.get("checks", [])],
            tables=d.get("tables", {}),
            wall_clock=d.get("wall_clock"),
        )


def render(report, fmt="json"):
    """Render as ``json`` (lossless), ``csv`` (one row per check) or ``text``."""
    if fmt == "json":
        return json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for c in report.checks:
            w.writerow([c.suite, c.name, c.anchor, repr(float(c.value)), repr(float(c.tolerance)), c.verdict])
        return buf.getvalue()
    if fmt == "text":
        rows = [("suite", "check", "anchor", "value", "tol", "verdict")]
        rows += [(c.suite, c.name, c.anchor, f"{c.value:.4e}", f"{c.tolerance:.1e}", c.verdict) for c in report.checks]
        widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
        lines = ["  ".join(cell.ljust(wd) for cell, wd in zip(r, widths)).rstrip() for r in rows]
        failed = sum(c.verdict == "fail" for c in report.checks)
        lines.append(f"{len(report.checks)} checks, {failed} failed, seed {report.seed}, version {report.version}")
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown format {fmt!r}; choose from {FORMATS}")
