"""Qualitative control checks and Shrink-and-Split domain extraction.

``check_wc`` / ``check_sc`` decide weak and strong control of a target
on one path.  ``shrink_and_split`` returns the domain of control as a
sorted list of intervals tagged Strong (every value proven feasible)
or Weak (only the bounds are known feasible); ``sns_fixed_bits`` first
computes the bits shared by every feasible value so that holes they
induce never cost a split.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator

from . import formula as F
from .bits import count_fixed_bits, fixed_bits_runs
from .formula import SymbolicState, TargetSpec
from .solver.base import (ScResult, Solver, SolverConfig, Status, Verdict, as_solver)

log = logging.getLogger(__name__)

DEFAULT_SPLIT_LIMIT = 100
DISSOLVE_LIMIT = 1 << 16


class Guarantee(str, enum.Enum):
    STRONG = "strong"
    WEAK = "weak"


@dataclass(frozen=True, order=True)
class ControlInterval:
    lo: int
    hi: int
    guarantee: Guarantee = Guarantee.STRONG

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    @property
    def strong(self) -> bool:
        return self.guarantee is Guarantee.STRONG

    @property
    def size(self) -> int:
        return self.hi - self.lo + 1


@dataclass(frozen=True)
class FixedBits:
    mask: int
    bits: int

    def __post_init__(self):
        if self.bits & ~self.mask:
            raise ValueError("fixed bits outside of mask")

    def admits(self, v: int) -> bool:
        return v & self.mask == self.bits


@dataclass(frozen=True)
class ControlDomain:
    width: int
    intervals: tuple[ControlInterval, ...] = ()
    fixed_bits: FixedBits | None = None
    exact: bool = False
    splits_used: int = 0
    budget_exhausted: bool = False

    def __post_init__(self):
        ivs = tuple(sorted(self.intervals))
        top = F.mask_of(self.width)
        for a, b in zip(ivs, ivs[1:]):
            if b.lo <= a.hi or (b.lo == a.hi + 1 and a.guarantee == b.guarantee):
                raise ValueError("intervals overlap or touch")
        if ivs and (ivs[0].lo < 0 or ivs[-1].hi > top):
            raise ValueError("interval outside the domain")
        object.__setattr__(self, "intervals", ivs)
        if self.exact and (self.budget_exhausted or not all(i.strong for i in ivs)):
            raise ValueError("exact domains only hold strong intervals")

    # -- represented sets ---------------------------------------------------
    def _runs(self, intervals: Iterable[ControlInterval]) -> Iterator[tuple[int, int]]:
        for iv in intervals:
            if self.fixed_bits is None:
                yield iv.lo, iv.hi
            else:
                yield from fixed_bits_runs(iv.lo, iv.hi, self.fixed_bits.mask,
                                           self.fixed_bits.bits)

    def runs(self, strong_only: bool = False) -> Iterator[tuple[int, int]]:
        """Maximal runs of represented values (fixed bits applied)."""
        ivs = [i for i in self.intervals if i.strong or not strong_only]
        yield from self._runs(ivs)

    def count(self, strong_only: bool = False) -> int:
        total = 0
        for iv in self.intervals:
            if strong_only and not iv.strong:
                continue
            if self.fixed_bits is None:
                total += iv.size
            else:
                total += count_fixed_bits(iv.lo, iv.hi, self.fixed_bits.mask, self.fixed_bits.bits)
        return total

    def values(self, strong_only: bool = False) -> Iterator[int]:
        for lo, hi in self.runs(strong_only):
            yield from range(lo, hi + 1)

    def __contains__(self, v: int) -> bool:
        if self.fixed_bits is not None and not self.fixed_bits.admits(v):
            return False
        return any(i.lo <= v <= i.hi for i in self.intervals)

    @property
    def is_empty(self) -> bool:
        return not self.intervals

    @property
    def is_full(self) -> bool:
        return (self.exact and len(self.intervals) == 1 and self.fixed_bits is None
                and self.intervals[0].lo == 0 and self.intervals[0].hi == F.mask_of(self.width))


@dataclass(frozen=True)
class SnsConfig:
    split_limit: int = DEFAULT_SPLIT_LIMIT
    use_fixed_bits: bool = False
    solver: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self):
        if self.split_limit < 0:
            raise ValueError("split limit must be non-negative")


# --------------------------------------------------------------------------
# qualitative checks


def check_wc(state: SymbolicState, target: TargetSpec, solver=None) -> bool | None:
    """True iff two distinct target values are feasible; None on unknown."""
    solver = as_solver(solver)
    st = F.restrict_to_assumption(state, target)
    v = solver.weak_control(st, target.expr)
    return None if v.status is Status.UNKNOWN else v.is_sat


@dataclass(frozen=True)
class ScVerdict:
    holds: bool | None
    counterexample: int | None = None
    reason: str | None = None


def check_sc(state: SymbolicState, target: TargetSpec, assumption: tuple[int, int] | None = None,
             solver=None, fixed: FixedBits | None = None) -> ScVerdict:
    """Strong control over ``assumption`` (default: the whole domain)."""
    solver = as_solver(solver)
    lo, hi = assumption if assumption is not None else (0, F.mask_of(target.width))
    st = F.restrict_to_assumption(state, target)
    res = solver.sc_counterexample(st, target.expr, (lo, hi),
                                   None if fixed is None else (fixed.mask, fixed.bits))
    if res.status == "strong":
        return ScVerdict(True)
    if res.status == "counterexample":
        return ScVerdict(False, res.value)
    return ScVerdict(None, None, res.reason)


# --------------------------------------------------------------------------
# shrink and split


@dataclass(frozen=True)
class ShrinkResult:
    status: str  # "ok" | "empty" | "unknown"
    lo: int
    hi: int
    state: SymbolicState | None = None


def shrink(state: SymbolicState, target: TargetSpec, interval: tuple[int, int],
           solver=None) -> ShrinkResult:
    """Tighten ``interval`` to the feasible min and max of the target inside it."""
    solver = as_solver(solver)
    return _shrink(solver, state, target.expr, *interval)


def _shrink(solver: Solver, state, expr, lo, hi) -> ShrinkResult:
    low = solver.minimize(state, expr, (lo, hi))
    if low.status is Status.UNSAT:
        return ShrinkResult("empty", lo, hi)
    if low.status is Status.UNKNOWN:
        return ShrinkResult("unknown", lo, hi)
    high = solver.maximize(state, expr, (low.value, hi))
    if high.status is Status.SAT:
        new_lo, new_hi = low.value, high.value
        return ShrinkResult("ok", new_lo, new_hi,
                            F.conjoin(state, F.in_range(expr, new_lo, new_hi)))
    if high.status is Status.UNSAT:
        # low.value is feasible, so this only happens with an inconsistent backend
        return ShrinkResult("unknown", low.value, hi)
    return ShrinkResult("unknown", low.value, hi)


def shrink_and_split(state: SymbolicState, target: TargetSpec, config: SnsConfig | None = None,
                     solver=None, fixed: FixedBits | None = None) -> ControlDomain:
    config = config or SnsConfig()
    solver = as_solver(solver if solver is not None else config.solver)
    expr = target.expr
    st = F.restrict_to_assumption(state, target)
    fx = None if fixed is None or fixed.mask == 0 else fixed
    fixed_pair = None if fx is None else (fx.mask, fx.bits)

    out: list[ControlInterval] = []
    splits = 0
    exhausted = False
    # depth-first, lower half first; the restricted state of a sub-interval is
    # phi & v in [lo, hi], which subsumes every enclosing restriction
    work: list[tuple[int, int]] = [(0, F.mask_of(target.width))]
    while work:
        lo, hi = work.pop()
        sh = _shrink(solver, st, expr, lo, hi)
        if sh.status == "empty":
            continue
        if sh.status == "unknown":
            out.append(ControlInterval(sh.lo, sh.hi, Guarantee.WEAK))
            continue
        lo, hi = sh.lo, sh.hi
        sc: ScResult = solver.sc_counterexample(st, expr, (lo, hi), fixed_pair)
        if sc.status == "strong":
            out.append(ControlInterval(lo, hi, Guarantee.STRONG))
        elif sc.status == "unknown":
            out.append(ControlInterval(lo, hi, Guarantee.WEAK))
        elif splits >= config.split_limit:
            exhausted = True
            out.append(ControlInterval(lo, hi, Guarantee.WEAK))
        else:
            y = sc.value
            if not lo <= y <= hi:
                raise RuntimeError(f"solver returned counterexample {y} outside [{lo}, {hi}]")
            splits += 1
            if y < hi:
                work.append((y + 1, hi))
            if y > lo:
                work.append((lo, y - 1))
    exact = not exhausted and all(i.strong for i in out)
    return ControlDomain(target.width, tuple(coalesce_intervals(out)), fx, exact, splits, exhausted)


def coalesce_intervals(intervals: list[ControlInterval]) -> list[ControlInterval]:
    out: list[ControlInterval] = []
    for iv in sorted(intervals):
        if out and out[-1].guarantee == iv.guarantee and iv.lo <= out[-1].hi + 1:
            prev = out.pop()
            iv = ControlInterval(prev.lo, max(prev.hi, iv.hi), iv.guarantee)
        out.append(iv)
    return out


def fixed_bits(state: SymbolicState, target: TargetSpec, solver=None) -> FixedBits | None:
    """Bits equal in every feasible target value, or None when the query fails."""
    solver = as_solver(solver)
    st = F.restrict_to_assumption(state, target)
    res = solver.fixed_bits(st, target.expr)
    if res.status is not Status.SAT:
        return None
    return FixedBits(res.mask, res.bits)


def sns_fixed_bits(state: SymbolicState, target: TargetSpec, config: SnsConfig | None = None,
                   solver=None) -> ControlDomain:
    config = config or SnsConfig()
    solver = as_solver(solver if solver is not None else config.solver)
    fb = fixed_bits(state, target, solver)
    if fb is None:
        log.info("fixed bits query failed; continuing with mask=0, bits=0")
    return shrink_and_split(state, target, config, solver, fb)


def extract_domain(state: SymbolicState, target: TargetSpec, config: SnsConfig | None = None,
                   solver=None) -> ControlDomain:
    config = config or SnsConfig()
    if config.use_fixed_bits:
        return sns_fixed_bits(state, target, config, solver)
    return shrink_and_split(state, target, config, solver)


def brute_force_domain(state: SymbolicState, target: TargetSpec, solver=None) -> ControlDomain:
    """Exact domain by enumeration (internal backend only)."""
    solver = as_solver(solver)
    st = F.restrict_to_assumption(state, target)
    values = solver.enumerate_feasible(st, target.expr)
    return domain_from_values(target.width, values)


def domain_from_values(width: int, values: Iterable[int]) -> ControlDomain:
    out: list[ControlInterval] = []
    lo = prev = None
    for v in sorted(set(values)):
        if prev is not None and v == prev + 1:
            prev = v
            continue
        if lo is not None:
            out.append(ControlInterval(lo, prev))
        lo = prev = v
    if lo is not None:
        out.append(ControlInterval(lo, prev))
    return ControlDomain(width, tuple(out), None, True)


# --------------------------------------------------------------------------
# merging per-path domains


def dissolve_fixed_bits(domain: ControlDomain, limit: int = DISSOLVE_LIMIT) -> ControlDomain:
    """Same value set with the fixed-bit constraint expanded into intervals.

    Domains too fragmented to expand keep their intervals, dropping the
    constraint; they become over-approximations (all Weak, not exact).
    """
    fb = domain.fixed_bits
    if fb is None:
        return domain
    out: list[ControlInterval] = []
    for iv in domain.intervals:
        for n, (lo, hi) in enumerate(fixed_bits_runs(iv.lo, iv.hi, fb.mask, fb.bits)):
            if n >= limit:
                log.warning("fixed bits too fragmented to dissolve; weakening domain")
                weak = tuple(ControlInterval(i.lo, i.hi, Guarantee.WEAK) for i in domain.intervals)
                return replace(domain, intervals=tuple(coalesce_intervals(list(weak))),
                               fixed_bits=None, exact=False)
            out.append(ControlInterval(lo, hi, iv.guarantee))
    return replace(domain, intervals=tuple(coalesce_intervals(out)), fixed_bits=None)


def merge_domains(d1: ControlDomain, d2: ControlDomain) -> ControlDomain:
    """Union of two per-path domains of the same target."""
    if d1.width != d2.width:
        raise ValueError("cannot merge domains of different widths")
    fb = d1.fixed_bits if d1.fixed_bits == d2.fixed_bits else None
    if fb is None:
        d1, d2 = dissolve_fixed_bits(d1), dissolve_fixed_bits(d2)
    # sweep over boundaries: a point is strong if any strong interval covers it
    delta: dict[int, list[int]] = {}  # point -> [strong change, weak change]
    for iv in d1.intervals + d2.intervals:
        k = 0 if iv.strong else 1
        delta.setdefault(iv.lo, [0, 0])[k] += 1
        delta.setdefault(iv.hi + 1, [0, 0])[k] -= 1
    events = sorted(delta)
    pieces: list[ControlInterval] = []
    strong = weak = 0
    for a, b in zip(events, events[1:]):
        strong += delta[a][0]
        weak += delta[a][1]
        if strong:
            pieces.append(ControlInterval(a, b - 1, Guarantee.STRONG))
        elif weak:
            pieces.append(ControlInterval(a, b - 1, Guarantee.WEAK))
    return ControlDomain(
        d1.width, tuple(coalesce_intervals(pieces)), fb,
        exact=d1.exact and d2.exact,
        splits_used=d1.splits_used + d2.splits_used,
        budget_exhausted=d1.budget_exhausted or d2.budget_exhausted,
    )


__all__ = [
    "ControlDomain", "ControlInterval", "FixedBits", "Guarantee", "ScVerdict", "ShrinkResult",
    "SnsConfig", "Verdict", "brute_force_domain", "check_sc", "check_wc", "domain_from_values",
    "coalesce_intervals", "dissolve_fixed_bits", "extract_domain", "fixed_bits", "fixed_bits_runs",
    "merge_domains", "shrink", "shrink_and_split", "sns_fixed_bits",
]
