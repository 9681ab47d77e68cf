"""Sampling-based feasible-set estimator (comparison baseline).

Each working interval is shrunk to its feasible bounds, then probed with
uniform samples; every sample is one sat query with the target pinned.
A Wilson score interval bounds the density of feasible values.  Low
density intervals are split around a random feasible sample.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from statistics import NormalDist

import numpy as np

from . import formula as F
from .control import ControlDomain, ControlInterval, Guarantee, coalesce_intervals, shrink
from .formula import SymbolicState, TargetSpec
from .solver.base import Status, as_solver

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class NewsomeConfig:
    samples_per_interval: int = 30
    confidence: float = 0.95
    max_intervals: int = 100
    rng_seed: int = 0
    min_ci_width: float = 0.1

    def __post_init__(self):
        if not 0 < self.confidence < 1:
            raise ValueError("confidence must lie in (0, 1)")
        if self.samples_per_interval < 1:
            raise ValueError("need at least one sample per interval")
        if self.max_intervals < 1:
            raise ValueError("max_intervals must be positive")


@dataclass(frozen=True)
class DensityInterval:
    lo: int
    hi: int
    sample_count: int
    hits: int
    density_estimate: float
    confidence_interval: tuple[float, float]
    unknowns: int = 0
    fully_sampled: bool = False  # every value of [lo, hi] was hit

    @property
    def size(self) -> int:
        return self.hi - self.lo + 1

    def to_dict(self) -> dict:
        return {"lo": str(self.lo), "hi": str(self.hi), "sample_count": self.sample_count,
                "hits": self.hits, "density_estimate": self.density_estimate,
                "confidence_interval": list(self.confidence_interval),
                "unknowns": self.unknowns, "fully_sampled": self.fully_sampled}


@dataclass
class NewsomeResult:
    width: int
    intervals: list[DensityInterval] = field(default_factory=list)
    budget_exhausted: bool = False
    unknowns: int = 0

    def to_domain(self) -> ControlDomain:
        """Intervals as a domain; only exhaustively hit intervals are Strong."""
        ivs = [ControlInterval(i.lo, i.hi,
                               Guarantee.STRONG if i.fully_sampled else Guarantee.WEAK)
               for i in self.intervals]
        merged = coalesce_intervals(ivs)
        exact = bool(merged) and all(i.strong for i in merged) and not self.budget_exhausted
        return ControlDomain(self.width, tuple(merged), None, exact)

    def estimated_count(self) -> float:
        return sum(i.density_estimate * i.size for i in self.intervals)


def wilson_interval(hits: int, n: int, confidence: float = 0.95) -> tuple[float, float]:
    if n == 0:
        return 0.0, 1.0
    z = NormalDist().inv_cdf(1 - (1 - confidence) / 2)
    p = hits / n
    denom = 1 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    lo, hi = max(0.0, centre - half), min(1.0, centre + half)
    # keep lo <= p <= hi despite rounding at the extremes
    return min(lo, p), max(hi, p)


def _uniform(rng: np.random.Generator, lo: int, hi: int, n: int) -> list[int]:
    span = hi - lo + 1
    if span <= 1 << 63:
        return [lo + int(x) for x in rng.integers(0, span, size=n, dtype=np.uint64)]
    # wide 64-bit intervals: combine two 32-bit draws, reject out of range
    out = []
    while len(out) < n:
        x = (int(rng.integers(0, 1 << 32)) << 32) | int(rng.integers(0, 1 << 32))
        if x < span:
            out.append(lo + x)
    return out


def newsome_domain(state: SymbolicState, target: TargetSpec, config: NewsomeConfig | None = None,
                   solver=None) -> NewsomeResult:
    config = config or NewsomeConfig()
    solver = as_solver(solver)
    expr = target.expr
    st = F.restrict_to_assumption(state, target)
    result = NewsomeResult(target.width)
    root = np.random.SeedSequence(config.rng_seed)
    work = [(0, F.mask_of(target.width), root)]
    pending = 1  # intervals emitted or still queued; bounded by max_intervals
    while work:
        lo, hi, seq = work.pop()
        sh = shrink(st, target, (lo, hi), solver)
        if sh.status == "empty":
            pending -= 1
            continue
        lo, hi = sh.lo, sh.hi
        rng = np.random.default_rng(seq)
        n = config.samples_per_interval
        samples = _uniform(rng, lo, hi, n)
        hits, unknowns, feasible = 0, 0, []
        for y in samples:
            v = solver.check_sat(st, (F.eq(expr, F.const(y, target.width)),))
            if v.status is Status.SAT:
                hits += 1
                feasible.append(y)
            elif v.status is Status.UNKNOWN:
                unknowns += 1
        est = hits / n
        ci = wilson_interval(hits, n, config.confidence)
        size = hi - lo + 1
        interval = DensityInterval(lo, hi, n, hits, est, ci, unknowns,
                                   size <= n and len(set(feasible)) == size)
        result.unknowns += unknowns
        if unknowns:
            log.warning("%d sample queries returned unknown on [%d, %d]", unknowns, lo, hi)

        settled = (sh.status != "ok" or est >= 1.0 or ci[1] - ci[0] < config.min_ci_width
                   or size <= n)
        if settled:
            result.intervals.append(interval)
            continue
        if pending + 1 > config.max_intervals:
            result.budget_exhausted = True
            result.intervals.append(interval)
            continue
        if feasible:
            s = feasible[int(rng.integers(0, len(feasible)))]
        else:
            s = lo + (hi - lo) // 2
        left, right = ((lo, s), (s + 1, hi)) if s < hi else ((lo, s - 1), (s, hi))
        child_left, child_right = seq.spawn(2)
        pending += 1
        work.append((right[0], right[1], child_right))
        work.append((left[0], left[1], child_left))
    result.intervals.sort(key=lambda i: i.lo)
    return result
