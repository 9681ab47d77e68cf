"""JSON analysis reports and CSV interval dumps.

Large integers are written as decimal strings.  Everything that depends
on the clock (timestamp, wall times) lives under the top-level
``runtime`` key so two runs with the same arguments differ only there.
"""

from __future__ import annotations

import csv
import datetime as _dt
import hashlib
import io
import json
from dataclasses import dataclass, field
from importlib import resources
from typing import Any, Iterable

from . import __version__
from .bits import count_fixed_bits
from .control import ControlDomain, ControlInterval, FixedBits, Guarantee

SCHEMA_ID = "ctrldom-report/1"
CSV_COLUMNS = ("target", "lo", "hi", "guarantee", "density")


def domain_to_dict(domain: ControlDomain) -> dict:
    fb = domain.fixed_bits
    return {
        "width": domain.width,
        "intervals": [{"lo": str(i.lo), "hi": str(i.hi), "guarantee": i.guarantee.value}
                      for i in domain.intervals],
        "fixed_bits": None if fb is None else {"mask": str(fb.mask), "bits": str(fb.bits)},
        "exact": domain.exact,
        "splits_used": domain.splits_used,
        "budget_exhausted": domain.budget_exhausted,
        "count": str(domain.count()),
    }


def domain_from_dict(data: dict) -> ControlDomain:
    fb = data.get("fixed_bits")
    return ControlDomain(
        int(data["width"]),
        tuple(ControlInterval(int(i["lo"]), int(i["hi"]), Guarantee(i.get("guarantee", "strong")))
              for i in data.get("intervals", ())),
        None if fb is None else FixedBits(int(fb["mask"]), int(fb["bits"])),
        bool(data.get("exact", False)),
        int(data.get("splits_used", 0)),
        bool(data.get("budget_exhausted", False)),
    )


def sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def utc_timestamp() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


@dataclass
class TargetResult:
    label: str
    width: int
    algorithm: str
    offset: int = 0
    domain: ControlDomain | None = None
    wc: bool | None = None
    sc: bool | None = None
    sc_counterexample: int | None = None
    density: list[dict] | None = None
    scores: dict | None = None
    solver_stats: dict = field(default_factory=dict)
    concrete_value: int | None = None
    wall_time: float = 0.0
    exact: bool = False
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "width": self.width,
            "offset": str(self.offset),
            "algorithm": self.algorithm,
            "verdicts": {
                "wc": self.wc,
                "sc": self.sc,
                "sc_counterexample": None if self.sc_counterexample is None
                else str(self.sc_counterexample),
            },
            "domain": None if self.domain is None else domain_to_dict(self.domain),
            "density": self.density,
            "scores": self.scores,
            "solver": dict(self.solver_stats),
            "concrete_value": None if self.concrete_value is None else str(self.concrete_value),
            "exact": self.exact,
            "notes": list(self.notes),
        }


@dataclass
class AnalysisReport:
    input: dict
    config: dict
    targets: list[TargetResult] = field(default_factory=list)
    timestamp: str = field(default_factory=utc_timestamp)

    @property
    def exact(self) -> bool:
        return bool(self.targets) and all(t.exact for t in self.targets)

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA_ID,
            "tool": {"name": "ctrldom", "version": __version__},
            "input": self.input,
            "config": self.config,
            "exact": self.exact,
            "targets": [t.to_dict() for t in self.targets],
            "runtime": {
                "timestamp": self.timestamp,
                "wall_time_s": {t.label: round(t.wall_time, 6) for t in self.targets},
            },
        }

    def to_json(self) -> str:
        return dumps(self.to_dict())


def dumps(data: Any) -> str:
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


def strip_runtime(data: dict) -> dict:
    """Report without its clock-dependent section."""
    return {k: v for k, v in data.items() if k != "runtime"}


def load_schema() -> dict:
    text = (resources.files(__package__) / "report.schema.json").read_text(encoding="utf-8")
    return json.loads(text)


def validate_report(data: dict) -> None:
    """Validate against the shipped schema (requires ``jsonschema``)."""
    import jsonschema

    jsonschema.validate(data, load_schema())


# --------------------------------------------------------------------------
# CSV


def _interval_rows(target: dict) -> Iterable[tuple]:
    label = target["label"]
    if target.get("density"):
        for d in target["density"]:
            yield label, int(d["lo"]), int(d["hi"]), "sampled", d["density_estimate"]
        return
    dom = target.get("domain")
    if not dom:
        return
    fb = dom.get("fixed_bits")
    for iv in dom["intervals"]:
        lo, hi = int(iv["lo"]), int(iv["hi"])
        if fb is not None:
            density: float | str = count_fixed_bits(lo, hi, int(fb["mask"]),
                                                    int(fb["bits"])) / (hi - lo + 1)
        elif iv["guarantee"] == Guarantee.STRONG.value:
            density = 1.0
        else:
            density = ""  # weak: only the bounds are known feasible
        yield label, lo, hi, iv["guarantee"], density


def emit_plot_data(report: dict) -> str:
    """One CSV row per interval, sorted by lower bound within each target."""
    if not any(t.get("domain") or t.get("density") for t in report.get("targets", ())):
        raise ValueError("report holds no domain")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for target in report["targets"]:
        for row in sorted(_interval_rows(target), key=lambda r: (r[1], r[2])):
            writer.writerow(row)
    return buf.getvalue()
