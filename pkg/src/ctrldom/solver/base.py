from __future__ import annotations

import enum
import time
from dataclasses import dataclass, field

from .. import formula as F
from ..formula import SymbolicState, Term

DEFAULT_TIMEOUT_MS = 5 * 60 * 1000
DEFAULT_ENUM_BUDGET = 20


class SolverError(RuntimeError):
    pass


class BudgetExceeded(SolverError):
    """The internal enumerator refuses states wider than its budget."""


class SolverLaunchError(SolverError):
    pass


class Status(str, enum.Enum):
    SAT = "sat"
    UNSAT = "unsat"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class Verdict:
    status: Status
    model: dict[str, int] | None = None
    reason: str | None = None

    @property
    def is_sat(self) -> bool:
        return self.status is Status.SAT

    @property
    def is_unsat(self) -> bool:
        return self.status is Status.UNSAT

    @classmethod
    def unknown(cls, reason: str) -> "Verdict":
        return cls(Status.UNKNOWN, None, reason)


@dataclass(frozen=True)
class Optimum:
    """Result of minimize/maximize; ``best`` is the best bound seen so far."""

    status: Status
    value: int | None = None
    best: int | None = None
    reason: str | None = None


@dataclass(frozen=True)
class ScResult:
    """Outcome of the strong-control counterexample search."""

    status: str  # "strong" | "counterexample" | "unknown"
    value: int | None = None
    reason: str | None = None

    @property
    def strong(self) -> bool:
        return self.status == "strong"


@dataclass(frozen=True)
class SolverConfig:
    backend: str = "internal"
    command: str | None = None
    timeout_ms: int = DEFAULT_TIMEOUT_MS
    enum_budget: int = DEFAULT_ENUM_BUDGET
    optimization: str = "native"  # or "binary-search"

    def __post_init__(self):
        if self.backend not in ("internal", "external"):
            raise ValueError(f"unknown backend {self.backend!r}")
        if self.timeout_ms <= 0:
            raise ValueError("timeout must be positive")
        if self.optimization not in ("native", "binary-search"):
            raise ValueError(f"unknown optimization mode {self.optimization!r}")


@dataclass
class SolverStats:
    sat: int = 0
    optimize: int = 0
    quantified: int = 0
    unknown: int = 0
    wall_time: float = 0.0

    @property
    def queries(self) -> int:
        return self.sat + self.optimize + self.quantified

    def as_dict(self) -> dict:
        return {"queries": self.queries, "sat_queries": self.sat,
                "optimize_queries": self.optimize, "quantified_queries": self.quantified,
                "unknowns": self.unknown}


@dataclass(frozen=True)
class FixedBitsResult:
    status: Status
    mask: int = 0
    bits: int = 0


class Solver:
    """Common solver session interface.

    Subclasses implement ``_check`` (plain satisfiability), and may
    override the optimisation, quantified and fixed-bit queries with
    backend-specific procedures.  One query is in flight at a time.
    """

    def __init__(self, config: SolverConfig):
        self.config = config
        self.stats = SolverStats()

    # ---------------------------------------------------------------- sat
    def check_sat(self, state: SymbolicState, extra: tuple[Term, ...] = ()) -> Verdict:
        self.stats.sat += 1
        t0 = time.perf_counter()
        try:
            verdict = self._check(state, tuple(c for c in extra if c.op != "true"))
        finally:
            self.stats.wall_time += time.perf_counter() - t0
        if verdict.status is Status.UNKNOWN:
            self.stats.unknown += 1
        return verdict

    def _check(self, state: SymbolicState, extra: tuple[Term, ...]) -> Verdict:
        raise NotImplementedError

    # ----------------------------------------------------------- optimize
    def minimize(self, state: SymbolicState, expr: Term,
                 within: tuple[int, int] | None = None) -> Optimum:
        return self._optimize(state, expr, within, maximize=False)

    def maximize(self, state: SymbolicState, expr: Term,
                 within: tuple[int, int] | None = None) -> Optimum:
        return self._optimize(state, expr, within, maximize=True)

    def _optimize(self, state, expr, within, maximize):
        if self.config.optimization == "binary-search":
            return self.binary_search(state, expr, within, maximize)
        self.stats.optimize += 1
        t0 = time.perf_counter()
        try:
            res = self._native_optimize(state, expr, within, maximize)
        finally:
            self.stats.wall_time += time.perf_counter() - t0
        if res.status is Status.UNKNOWN:
            self.stats.unknown += 1
        return res

    def _native_optimize(self, state, expr, within, maximize) -> Optimum:
        return self.binary_search(state, expr, within, maximize)

    def binary_search(self, state: SymbolicState, expr: Term,
                      within: tuple[int, int] | None, maximize: bool) -> Optimum:
        """Feasible bound by bisection over sat queries.

        Uses at most ceil(log2 |range|) + 1 queries: the first model
        seeds the bound and every later model tightens it.
        """
        from .evaluate import eval_model

        lo, hi = within if within is not None else (0, F.mask_of(expr.width))
        base = (F.in_range(expr, lo, hi),)
        v = self.check_sat(state, base)
        if v.status is not Status.SAT:
            return Optimum(v.status, None, None, v.reason or "unsat")
        best = eval_model(v.model, expr)
        if maximize:
            lo = best
        else:
            hi = best
        while lo < hi:
            if maximize:
                mid = (lo + hi + 1) // 2
                probe = F.in_range(expr, mid, hi)
            else:
                mid = (lo + hi) // 2
                probe = F.in_range(expr, lo, mid)
            v = self.check_sat(state, base + (probe,))
            if v.status is Status.SAT:
                best = eval_model(v.model, expr)
                if maximize:
                    lo = best
                else:
                    hi = best
            elif v.status is Status.UNSAT:
                if maximize:
                    hi = mid - 1
                else:
                    lo = mid + 1
            else:
                return Optimum(Status.UNKNOWN, None, best, v.reason)
        return Optimum(Status.SAT, best, best)

    # ------------------------------------------------------- quantified
    def sc_counterexample(self, state: SymbolicState, expr: Term, within: tuple[int, int],
                          fixed: tuple[int, int] | None = None) -> ScResult:
        """Search an infeasible value of ``expr`` in ``within`` (and fixed bits)."""
        lo, hi = within
        if lo > hi:
            raise ValueError("empty assumption set")
        self.stats.quantified += 1
        t0 = time.perf_counter()
        try:
            res = self._sc(state, expr, lo, hi, fixed)
        finally:
            self.stats.wall_time += time.perf_counter() - t0
        if res.status == "unknown":
            self.stats.unknown += 1
        return res

    def _sc(self, state, expr, lo, hi, fixed) -> ScResult:
        raise NotImplementedError

    def weak_control(self, state: SymbolicState, expr: Term) -> Verdict:
        """sat(phi & phi' & v != v') over a duplicated state."""
        target = F.TargetSpec(expr)
        dup_state, dup_target = F.duplicate(state, target)
        both = F.merge_states(state, dup_state)
        return self.check_sat(both, (F.not_(F.eq(expr, dup_target.expr)),))

    def fixed_bits(self, state: SymbolicState, expr: Term) -> FixedBitsResult:
        self.stats.quantified += 1
        t0 = time.perf_counter()
        try:
            res = self._fixed_bits(state, expr)
        finally:
            self.stats.wall_time += time.perf_counter() - t0
        if res.status is Status.UNKNOWN:
            self.stats.unknown += 1
        return res

    def _fixed_bits(self, state, expr) -> FixedBitsResult:
        raise NotImplementedError

    def enumerate_feasible(self, state: SymbolicState, expr: Term) -> list[int]:
        raise SolverError(f"{type(self).__name__} cannot enumerate feasible values")

    def close(self) -> None:
        pass


def make_solver(config: SolverConfig | None = None) -> Solver:
    config = config or SolverConfig()
    if config.backend == "internal":
        from .internal import EnumerationSolver

        return EnumerationSolver(config)
    from .external import SmtProcessSolver

    return SmtProcessSolver(config)


def as_solver(obj) -> Solver:
    if obj is None:
        return make_solver()
    if isinstance(obj, Solver):
        return obj
    if isinstance(obj, SolverConfig):
        return make_solver(obj)
    raise TypeError(f"expected a Solver or SolverConfig, got {type(obj).__name__}")
