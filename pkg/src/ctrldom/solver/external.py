"""SMT-LIB2 solver process adapter.

Each query is a fresh script piped to the solver's standard input
(no incremental push/pop).  The command comes from the config or the
``CTRL_SOLVER_CMD`` environment variable; it must read a script from
stdin, e.g. ``z3 -in -smt2`` or ``bitwuzla``.
"""

from __future__ import annotations

import logging
import os
import shlex
import subprocess

from .. import formula as F
from ..formula import SymbolicState, Term
from ..smt2 import (Atom, SmtSyntaxError, read_sexprs, sexpr_to_text, sort_text,
                    term_to_smt2)
from .base import (FixedBitsResult, Optimum, ScResult, Solver, SolverConfig, SolverLaunchError,
                   Status, Verdict)

log = logging.getLogger(__name__)

DEFAULT_COMMAND = "z3 -in -smt2"


def _value_of(sx) -> int:
    if isinstance(sx, Atom):
        t = sx.text
        if t.startswith("#x"):
            return int(t[2:], 16)
        if t.startswith("#b"):
            return int(t[2:], 2)
        return int(t)
    if len(sx) == 3 and str(sx[0]) == "_":
        return int(str(sx[1])[2:])
    raise ValueError(f"cannot read model value {sexpr_to_text(sx)}")


class SmtProcessSolver(Solver):
    def __init__(self, config: SolverConfig | None = None):
        super().__init__(config or SolverConfig(backend="external"))
        self.command = self.config.command or os.environ.get("CTRL_SOLVER_CMD") or DEFAULT_COMMAND
        self.last_script = ""

    # ------------------------------------------------------------ process
    def run(self, script: str, names: list[str]) -> Verdict:
        """Run one script ending in check-sat; read back ``names`` on sat."""
        if names:
            script += f"(get-value ({' '.join(names)}))\n"
        script += "(exit)\n"
        self.last_script = script
        try:
            proc = subprocess.run(shlex.split(self.command), input=script, capture_output=True,
                                  text=True, timeout=self.config.timeout_ms / 1000)
        except FileNotFoundError as exc:
            raise SolverLaunchError(f"cannot launch solver {self.command!r}: {exc}") from exc
        except subprocess.TimeoutExpired:
            return Verdict.unknown("timeout")
        try:
            out = read_sexprs(proc.stdout)
        except SmtSyntaxError:
            return Verdict.unknown(f"unreadable solver output: {proc.stdout[:200]!r}")
        head = [x for x in out if not (isinstance(x, list) and x and str(x[0]) == "objectives")]
        if not head or not isinstance(head[0], Atom):
            err = proc.stderr.strip() or proc.stdout.strip()
            return Verdict.unknown(f"process failure: {err[:200]}")
        status = head[0].text
        if status == "unsat":
            return Verdict(Status.UNSAT)
        if status != "sat":
            reason = "unknown" if status == "unknown" else f"solver error: {sexpr_to_text(head[0])}"
            return Verdict.unknown(reason)
        model: dict[str, int] = {}
        for item in head[1:]:
            if isinstance(item, list) and item and str(item[0]) == "error":
                return Verdict.unknown(f"solver error: {sexpr_to_text(item)}")
            if isinstance(item, list):
                for pair in item:
                    model[str(pair[0])] = _value_of(pair[1])
        return Verdict(Status.SAT, model)

    # ------------------------------------------------------------ scripts
    @staticmethod
    def _logic(state: SymbolicState, quantified: bool) -> str:
        base = "ABV" if state.passthrough else "BV"
        return base if quantified else "QF_" + base

    @staticmethod
    def _decls(inputs) -> list[str]:
        return [f"(declare-const {term_to_smt2(F.var(n, w))} {sort_text(w)})" for n, w in inputs]

    def _script(self, state: SymbolicState, extra=(), quantified=False, consts=()) -> str:
        lines = ["(set-option :produce-models true)",
                 f"(set-logic {self._logic(state, quantified)})"]
        lines += self._decls(list(consts) + list(state.inputs))
        lines += list(state.passthrough)
        lines += [f"(assert {term_to_smt2(c)})" for c in state.constraints + tuple(extra)]
        return "\n".join(lines) + "\n"

    @staticmethod
    def _forall(state: SymbolicState, body: Term) -> str:
        phi = F.and_(*state.constraints)
        inner = f"(=> {term_to_smt2(phi)} {term_to_smt2(body)})"
        if not state.inputs:
            return inner
        binders = " ".join(f"({term_to_smt2(F.var(n, w))} {sort_text(w)})" for n, w in state.inputs)
        return f"(forall ({binders}) {inner})"

    def _input_names(self, state: SymbolicState) -> list[str]:
        return [term_to_smt2(F.var(n, w)) for n, w in state.inputs]

    # ------------------------------------------------------------ queries
    def _check(self, state, extra) -> Verdict:
        v = self.run(self._script(state, extra) + "(check-sat)\n", self._input_names(state))
        if v.is_sat:
            # inputs the solver left unconstrained may be omitted; default to 0
            v = Verdict(Status.SAT, {n: v.model.get(n, 0) for n, _ in state.inputs})
        return v

    def _native_optimize(self, state, expr, within, maximize) -> Optimum:
        lo, hi = within if within is not None else (0, F.mask_of(expr.width))
        extra = (F.in_range(expr, lo, hi),)
        directive = "maximize" if maximize else "minimize"
        name = "ctrl!objective"
        script = self._script(state, extra)
        script += f"(declare-const {term_to_smt2(F.var(name, expr.width))} {sort_text(expr.width)})\n"
        script += f"(assert (= |{name}| {term_to_smt2(expr)}))\n"
        script += f"({directive} |{name}|)\n(check-sat)\n"
        v = self.run(script, [f"|{name}|"])
        if v.status is Status.SAT:
            val = v.model.get(name)
            return Optimum(Status.SAT, val, val)
        return Optimum(v.status, None, None, v.reason or "unsat")

    def _sc(self, state, expr, lo, hi, fixed) -> ScResult:
        if state.passthrough:
            return ScResult("unknown", reason="quantified query over passthrough array terms")
        y_name = F.fresh_names(["y"], state.names)["y"]
        y = F.var(y_name, expr.width)
        conds = [F.in_range(y, lo, hi)]
        if fixed and fixed[0]:
            conds.append(F.fixed_bits_predicate(y, *fixed))
        script = "(set-option :produce-models true)\n(set-logic BV)\n"
        script += f"(declare-const {term_to_smt2(y)} {sort_text(expr.width)})\n"
        for c in conds:
            if c.op != "true":
                script += f"(assert {term_to_smt2(c)})\n"
        script += f"(assert {self._forall(state, F.not_(F.eq(expr, y)))})\n(check-sat)\n"
        v = self.run(script, [term_to_smt2(y)])
        if v.status is Status.UNSAT:
            return ScResult("strong")
        if v.status is Status.SAT:
            return ScResult("counterexample", v.model[y_name])
        return ScResult("unknown", reason=v.reason)

    def _fixed_bits(self, state, expr) -> FixedBitsResult:
        if state.passthrough:
            return FixedBitsResult(Status.UNKNOWN)
        target = F.TargetSpec(expr)
        s1, t1 = F.duplicate(state, target)
        s2, t2 = F.duplicate(state, target, taken=s1.names)
        taken = state.names | s1.names | s2.names
        names = F.fresh_names(["mask", "bits"], taken)
        w = expr.width
        mask, bits = F.var(names["mask"], w), F.var(names["bits"], w)
        both = F.merge_states(s1, s2)
        extra = (
            F.eq(mask, F.unop("bvnot", F.binop("bvxor", t1.expr, t2.expr))),
            F.eq(bits, F.binop("bvand", t1.expr, t2.expr)),
        )
        script = self._script(both, extra, quantified=True,
                              consts=[(names["mask"], w), (names["bits"], w)])
        body = F.eq(F.binop("bvand", expr, mask), bits)
        script += f"(assert {self._forall(state, body)})\n(check-sat)\n"
        v = self.run(script, [term_to_smt2(mask), term_to_smt2(bits)])
        if v.status is Status.SAT:
            return FixedBitsResult(Status.SAT, v.model[names["mask"]], v.model[names["bits"]])
        return FixedBitsResult(v.status)
