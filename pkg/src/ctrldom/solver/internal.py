"""Brute-force enumerator over input assignments.

Every query is decided exactly by evaluating the constraints over the
whole input grid (vectorised with numpy).  It is the ground truth the
symbolic algorithms are checked against, so it deliberately has no SAT
machinery.
"""

from __future__ import annotations

from bisect import bisect_right
from collections import OrderedDict

import numpy as np

from .. import formula as F
from ..bits import count_fixed_bits
from ..formula import SymbolicState, Term, UnsupportedError
from .base import (BudgetExceeded, FixedBitsResult, Optimum, ScResult, Solver, SolverConfig,
                   Status, Verdict)
from .evaluate import eval_vector


class _Grid:
    """All assignments of a fixed input list, one row per grid index."""

    def __init__(self, inputs: tuple[tuple[str, int], ...]):
        self.inputs = inputs
        self.size = 1 << sum(w for _, w in inputs)
        idx = np.arange(self.size, dtype=np.uint64)
        self.env: dict[str, np.ndarray] = {}
        offset = 0
        for name, width in inputs:
            self.env[name] = (idx >> np.uint64(offset)) & np.uint64(F.mask_of(width))
            offset += width
        self.cache: dict[Term, np.ndarray] = {}

    def values(self, term: Term) -> np.ndarray:
        if len(self.cache) > 20000:
            self.cache.clear()
        out = eval_vector(term, self.env, self.cache)
        return np.broadcast_to(out, (self.size,))

    def mask(self, constraints) -> np.ndarray:
        m = np.ones(self.size, dtype=bool)
        for c in constraints:
            m &= self.values(c)
        return m

    def model(self, index: int) -> dict[str, int]:
        return {name: int(arr[index]) for name, arr in self.env.items()}


def _count_fixed(lo: int, hi: int, mask: int, bits: int) -> int:
    return count_fixed_bits(lo, hi, mask, bits)


class EnumerationSolver(Solver):
    def __init__(self, config: SolverConfig | None = None):
        super().__init__(config or SolverConfig())
        self._grids: OrderedDict = OrderedDict()
        self._feasible: OrderedDict = OrderedDict()

    # ------------------------------------------------------------ plumbing
    def _grid(self, state: SymbolicState) -> _Grid:
        if state.passthrough:
            raise UnsupportedError("internal backend cannot interpret passthrough array terms")
        bits = state.input_bits
        if bits > self.config.enum_budget:
            raise BudgetExceeded(
                f"state has {bits} input bits, enumeration budget is {self.config.enum_budget}")
        grid = self._grids.get(state.inputs)
        if grid is None:
            grid = _Grid(state.inputs)
            self._grids[state.inputs] = grid
            if len(self._grids) > 8:
                self._grids.popitem(last=False)
        return grid

    def feasible_values(self, state: SymbolicState, expr: Term) -> np.ndarray:
        """Sorted distinct values of ``expr`` over all models of ``state``."""
        key = (state.inputs, state.constraints, expr)
        hit = self._feasible.get(key)
        if hit is not None:
            return hit
        grid = self._grid(state)
        F.check_declared(expr, dict(state.inputs))
        vals = np.unique(grid.values(expr)[grid.mask(state.constraints)])
        self._feasible[key] = vals
        if len(self._feasible) > 64:
            self._feasible.popitem(last=False)
        return vals

    def _slice(self, vals: np.ndarray, lo: int, hi: int) -> np.ndarray:
        a = np.searchsorted(vals, np.uint64(lo), side="left")
        b = np.searchsorted(vals, np.uint64(hi), side="right")
        return vals[a:b]

    # -------------------------------------------------------------- queries
    def _check(self, state, extra) -> Verdict:
        grid = self._grid(state)
        for c in extra:
            F.check_declared(c, dict(state.inputs))
        m = grid.mask(state.constraints + extra)
        idx = np.flatnonzero(m)
        if idx.size == 0:
            return Verdict(Status.UNSAT)
        return Verdict(Status.SAT, grid.model(int(idx[0])))

    def _native_optimize(self, state, expr, within, maximize) -> Optimum:
        lo, hi = within if within is not None else (0, F.mask_of(expr.width))
        vals = self._slice(self.feasible_values(state, expr), lo, hi)
        if vals.size == 0:
            return Optimum(Status.UNSAT, reason="unsat")
        v = int(vals[-1] if maximize else vals[0])
        return Optimum(Status.SAT, v, v)

    def _sc(self, state, expr, lo, hi, fixed) -> ScResult:
        vals = self._slice(self.feasible_values(state, expr), lo, hi)
        mask, bits = fixed if fixed else (0, 0)
        if mask:
            vals = vals[(vals & np.uint64(mask)) == np.uint64(bits)]
        total = _count_fixed(lo, hi, mask, bits)
        if total == 0:
            raise ValueError("empty assumption set")
        if vals.size == total:
            return ScResult("strong")
        return ScResult("counterexample", self._first_hole(vals, lo, hi, mask, bits))

    def _first_hole(self, vals: np.ndarray, lo, hi, mask, bits) -> int:
        # smallest x with #candidates(lo..x) > #feasible(lo..x)
        feas = [int(v) for v in vals] if vals.size < 4096 else None

        def feasible_upto(x: int) -> int:
            if feas is not None:
                return bisect_right(feas, x)
            return int(np.searchsorted(vals, np.uint64(x), side="right"))

        a, b = lo, hi
        while a < b:
            mid = (a + b) // 2
            if _count_fixed(lo, mid, mask, bits) > feasible_upto(mid):
                b = mid
            else:
                a = mid + 1
        return a

    def weak_control(self, state, expr) -> Verdict:
        self.stats.sat += 1
        vals = self.feasible_values(state, expr)
        if vals.size >= 2:
            grid = self._grid(state)
            m = grid.mask(state.constraints)
            v = grid.values(expr)
            i = int(np.flatnonzero(m & (v == vals[0]))[0])
            j = int(np.flatnonzero(m & (v == vals[1]))[0])
            model = grid.model(i)
            dup = F.fresh_names([n for n, _ in state.inputs], state.names)
            model.update({dup[n]: x for n, x in grid.model(j).items()})
            return Verdict(Status.SAT, model)
        return Verdict(Status.UNSAT)

    def _fixed_bits(self, state, expr) -> FixedBitsResult:
        vals = self.feasible_values(state, expr)
        if vals.size == 0:
            return FixedBitsResult(Status.UNSAT)
        full = np.uint64(F.mask_of(expr.width))
        first = vals[0]
        agree = full
        for chunk in np.array_split(vals, max(1, vals.size // 65536)):
            agree &= np.bitwise_and.reduce(~(chunk ^ first) & full)
        mask = int(agree)
        free = int(full) & ~mask
        # a witnessing pair must disagree on every free bit
        partners = vals ^ np.uint64(free)
        if not np.isin(partners, vals, assume_unique=True).any():
            return FixedBitsResult(Status.UNSAT)
        return FixedBitsResult(Status.SAT, mask, int(first) & mask)

    def enumerate_feasible(self, state, expr) -> list[int]:
        return [int(v) for v in self.feasible_values(state, expr)]

    def feasible_count_in(self, state, expr, lo: int, hi: int) -> int:
        vals = self.feasible_values(state, expr)
        return bisect_right_np(vals, hi) - bisect_left_np(vals, lo)


def bisect_left_np(vals: np.ndarray, x: int) -> int:
    return int(np.searchsorted(vals, np.uint64(x), side="left"))


def bisect_right_np(vals: np.ndarray, x: int) -> int:
    return int(np.searchsorted(vals, np.uint64(x), side="right"))

