"""End-to-end analysis: load targets, run an algorithm, score, report."""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

from .control import (ControlDomain, SnsConfig, brute_force_domain, check_sc, check_wc,
                      shrink_and_split, sns_fixed_bits)
from .formula import SymbolicState, TargetSpec
from .metrics import WeightFunction, get_weight, score_domain
from .newsome import NewsomeConfig, newsome_domain
from .report import AnalysisReport, TargetResult, sha256_text
from .smt2 import parse_smt2
from .solver.base import SolverConfig, make_solver

ALGORITHMS = ("sns", "snsfb", "newsome", "brute", "wc", "sc")
DEFAULT_WEIGHTS = ("log", "inv-square", "inv-sqrt")


@dataclass(frozen=True)
class LoadedTarget:
    state: SymbolicState
    target: TargetSpec
    concrete_value: int | None = None


@dataclass
class LoadedInput:
    kind: str  # "smt2" | "fixture"
    name: str
    targets: list[LoadedTarget]
    sha256: str | None = None
    inputs: dict[str, int] = field(default_factory=dict)

    def provenance(self) -> dict:
        out: dict = {"kind": self.kind, "name": self.name}
        if self.sha256:
            out["sha256"] = self.sha256
        if self.inputs:
            out["inputs"] = {k: str(v) for k, v in sorted(self.inputs.items())}
        return out


def load_smt2_input(path) -> LoadedInput:
    text = Path(path).read_text(encoding="utf-8")
    state, target = parse_smt2(text)
    return LoadedInput("smt2", str(path), [LoadedTarget(state, target)], sha256_text(text))


def load_fixture_input(name: str, inputs: dict[str, int] | None = None,
                       sink: str | None = None) -> LoadedInput:
    from .toy import get_fixture, run

    fx = get_fixture(name)
    values = dict(fx.inputs)
    values.update(inputs or {})
    trace = run(fx.program, values)
    hits = [h for h in trace.sinks if sink is None or h.label == sink]
    if not hits:
        what = f"sink {sink!r}" if sink else "any sink"
        raise LookupError(f"fixture {name!r} does not reach {what} with inputs {values}")
    return LoadedInput("fixture", name,
                       [LoadedTarget(h.state, h.target, h.value) for h in hits],
                       sha256_text(fx.program.source), values)


@dataclass(frozen=True)
class RunConfig:
    algo: str = "sns"
    sns: SnsConfig = field(default_factory=SnsConfig)
    newsome: NewsomeConfig = field(default_factory=NewsomeConfig)
    weights: tuple[str, ...] = DEFAULT_WEIGHTS

    def __post_init__(self):
        if self.algo not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algo!r}")

    @property
    def solver(self) -> SolverConfig:
        return self.sns.solver

    def describe(self) -> dict:
        s = self.solver
        out = {
            "algo": self.algo,
            "split_limit": self.sns.split_limit,
            "solver": s.backend,
            "timeout_ms": s.timeout_ms,
            "enum_budget": s.enum_budget,
            "optimization": s.optimization,
            "weights": list(self.weights),
        }
        if self.algo == "newsome":
            n = self.newsome
            out.update(seed=n.rng_seed, samples_per_interval=n.samples_per_interval,
                       confidence=n.confidence, max_intervals=n.max_intervals)
        return out


def _weights(names: Iterable[str]) -> list[WeightFunction]:
    return [get_weight(n) for n in names]


def compute_domain(state: SymbolicState, target: TargetSpec, algo: str, config: RunConfig,
                   solver) -> tuple[ControlDomain, list[dict] | None]:
    if algo == "sns":
        return shrink_and_split(state, target, replace(config.sns, use_fixed_bits=False),
                                solver), None
    if algo == "snsfb":
        return sns_fixed_bits(state, target, config.sns, solver), None
    if algo == "brute":
        return brute_force_domain(state, target, solver), None
    if algo == "newsome":
        res = newsome_domain(state, target, config.newsome, solver)
        return res.to_domain(), [i.to_dict() for i in res.intervals]
    raise ValueError(f"{algo!r} does not compute a domain")


def analyze_target(loaded: LoadedTarget, config: RunConfig) -> TargetResult:
    state, target = loaded.state, loaded.target
    solver = make_solver(config.solver)
    t0 = time.perf_counter()
    res = TargetResult(target.label, target.width, config.algo, target.offset,
                       concrete_value=loaded.concrete_value)
    try:
        if config.algo == "wc":
            res.wc = check_wc(state, target, solver)
            res.exact = res.wc is not None
        elif config.algo == "sc":
            v = check_sc(state, target, solver=solver)
            res.sc, res.sc_counterexample = v.holds, v.counterexample
            res.exact = v.holds is not None
            if v.reason:
                res.notes.append(f"sc unknown: {v.reason}")
        else:
            domain, density = compute_domain(state, target, config.algo, config, solver)
            res.domain, res.density, res.exact = domain, density, domain.exact
            if domain.exact and target.assumption is None:
                # exact domains settle both verdicts without further queries
                res.wc = domain.count() > 1
                res.sc = domain.count() == 1 << target.width
            else:
                res.wc = check_wc(state, target, solver)
                v = check_sc(state, target, solver=solver)
                res.sc, res.sc_counterexample = v.holds, v.counterexample
            if domain.budget_exhausted:
                res.notes.append("split limit reached; remaining intervals are weak")
            res.scores = score_domain(domain, _weights(config.weights), target.offset).to_dict()
    finally:
        res.wall_time = time.perf_counter() - t0
        res.solver_stats = solver.stats.as_dict()
        solver.close()
    return res


def analyze(loaded: LoadedInput, config: RunConfig) -> AnalysisReport:
    report = AnalysisReport(loaded.provenance(), config.describe())
    for t in loaded.targets:
        report.targets.append(analyze_target(t, config))
    return report


# --------------------------------------------------------------------------
# comparison


def represented_runs(domain: ControlDomain, strong_only: bool = False) -> list[tuple[int, int]]:
    """Disjoint, merged runs of the represented value set."""
    runs = sorted(domain.runs(strong_only))
    out: list[tuple[int, int]] = []
    for lo, hi in runs:
        if out and lo <= out[-1][1] + 1:
            out[-1] = (out[-1][0], max(out[-1][1], hi))
        else:
            out.append((lo, hi))
    return out


def runs_subset(a: Sequence[tuple[int, int]], b: Sequence[tuple[int, int]]) -> bool:
    """Whether the union of runs ``a`` is contained in the union of ``b``."""
    j = 0
    for lo, hi in a:
        while j < len(b) and b[j][1] < lo:
            j += 1
        if j == len(b) or not (b[j][0] <= lo and hi <= b[j][1]):
            return False
    return True


def relation(a: ControlDomain, b: ControlDomain) -> str:
    """Inclusion relation of the value set of ``a`` relative to ``b``."""
    ra, rb = represented_runs(a), represented_runs(b)
    sub, sup = runs_subset(ra, rb), runs_subset(rb, ra)
    if sub and sup:
        return "equal"
    if sub:
        return "subset"
    if sup:
        return "superset"
    return "incomparable"


def compare(loaded: LoadedInput, algos: Sequence[str], config: RunConfig) -> dict:
    rows = []
    for t in loaded.targets:
        oracle = None
        if config.solver.backend == "internal" and t.state.input_bits <= config.solver.enum_budget:
            oracle = brute_force_domain(t.state, t.target, make_solver(config.solver))
        for algo in algos:
            res = analyze_target(t, replace(config, algo=algo))
            row = {"target": res.label, "algorithm": algo, "exact": res.exact,
                   "wc": res.wc, "sc": res.sc,
                   "queries": res.solver_stats.get("queries", 0),
                   "wall_time_s": round(res.wall_time, 6)}
            if res.domain is not None:
                row["count"] = str(res.domain.count())
                row["intervals"] = len(res.domain.intervals)
                if oracle is not None:
                    truth = represented_runs(oracle)
                    row["vs_oracle"] = relation(res.domain, oracle)
                    row["sound"] = (runs_subset(represented_runs(res.domain, True), truth)
                                    and runs_subset(truth, represented_runs(res.domain)))
            rows.append(row)
    return {"input": loaded.provenance(), "config": config.describe(), "rows": rows}

