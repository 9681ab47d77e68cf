"""Concrete, single-path symbolic and taint execution of toy programs.

All three views come from one concolic walk: every variable carries a
concrete value, a symbolic term over the program inputs and a taint tag.
Branches follow the concrete values; the taken condition is appended to
the path constraint.  Symbolic memory addresses are concretized (the
equality with the concrete address joins the path constraint).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

from .. import formula as F
from ..formula import SymbolicState, TargetSpec, Term
from ..solver.evaluate import eval_term
from .ir import Assign, If, Load, Repeat, Sink, Store, ToyProgram

MAX_STEPS = 1_000_000


class ToyRuntimeError(RuntimeError):
    pass


class SinkNotReached(LookupError):
    pass


@dataclass(frozen=True)
class TaintOptions:
    control_flow: bool = False
    memory_overapprox: bool = False
    suppression: bool = False

    @classmethod
    def all_combinations(cls) -> list["TaintOptions"]:
        return [cls(a, b, c) for a in (False, True) for b in (False, True) for c in (False, True)]


@dataclass(frozen=True)
class MemoryTrap:
    line: int
    address: int
    nbytes: int
    kind: str  # "load" | "store"


@dataclass(frozen=True)
class SinkHit:
    label: str
    line: int
    value: int
    state: SymbolicState
    target: TargetSpec
    tainted: bool


@dataclass
class ConcreteTrace:
    steps: list[tuple[int, str]] = field(default_factory=list)
    store: dict[str, int] = field(default_factory=dict)
    memory: bytes = b""
    sinks: list[SinkHit] = field(default_factory=list)
    trap: MemoryTrap | None = None

    def sink(self, label: str) -> SinkHit:
        for hit in self.sinks:
            if hit.label == label:
                return hit
        raise SinkNotReached(f"sink {label!r} not reached")


class _Halt(Exception):
    pass


class _Machine:
    def __init__(self, program: ToyProgram, inputs: Mapping[str, int], taint: TaintOptions):
        missing = [n for n, _ in program.inputs if n not in inputs]
        if missing:
            raise ValueError(f"missing input values: {', '.join(missing)}")
        self.program = program
        self.opts = taint
        self.conc: dict[str, int] = {}
        self.sym: dict[str, Term] = {}
        self.taint: dict[str, bool] = {}
        for name, width in program.inputs:
            self.conc[name] = inputs[name] & F.mask_of(width)
            self.sym[name] = F.var(name, width)
            self.taint[name] = True
        self.mem_conc = [0] * program.mem_size
        self.mem_sym: list[Term] = [F.const(0, 8)] * program.mem_size
        self.mem_taint = [False] * program.mem_size
        self.constraints: list[Term] = []
        self.cf_taint: list[bool] = []
        self.trace = ConcreteTrace()
        self.steps = 0
        self.hits: dict[str, int] = {}

    # -- expression views -------------------------------------------------
    def _check_defined(self, term: Term, line: int) -> None:
        for name in F.free_vars(term):
            if name not in self.conc:
                raise ToyRuntimeError(f"line {line}: {name} read before assignment")

    def value(self, term: Term, line: int) -> int | bool:
        self._check_defined(term, line)
        return eval_term(term, self.conc)

    def symbolic(self, term: Term) -> Term:
        return F.fold_constants(F.substitute(term, self.sym))

    def tainted(self, term: Term) -> bool:
        return any(self.taint[n] for n in F.free_vars(term))

    def _assign_taint(self, t: bool) -> bool:
        if self.opts.control_flow and any(self.cf_taint):
            return True
        return t

    def _address(self, term: Term, nbytes: int, line: int, kind: str) -> int:
        addr = self.value(term, line)
        if addr + nbytes > len(self.mem_conc):
            self.trace.trap = MemoryTrap(line, addr, nbytes, kind)
            raise _Halt
        sym = self.symbolic(term)
        if not F.is_ground(sym):
            self.constraints.append(F.eq(sym, F.const(addr, sym.width)))
        return addr

    # -- statements -------------------------------------------------------
    def run(self, stmts) -> None:
        for s in stmts:
            self.steps += 1
            if self.steps > MAX_STEPS:
                raise ToyRuntimeError("step limit exceeded")
            if isinstance(s, Assign):
                self.trace.steps.append((s.line, "assign"))
                self.conc[s.var] = self.value(s.expr, s.line)
                self.sym[s.var] = self.symbolic(s.expr)
                t = self.tainted(s.expr)
                if self.opts.suppression and _suppressed(s.expr):
                    t = False
                self.taint[s.var] = self._assign_taint(t)
            elif isinstance(s, Load):
                self.trace.steps.append((s.line, "load"))
                a = self._address(s.addr, s.nbytes, s.line, "load")
                cells = range(a, a + s.nbytes)
                self.conc[s.var] = sum(self.mem_conc[c] << (8 * i) for i, c in enumerate(cells))
                sym = self.mem_sym[a]
                for c in cells[1:]:
                    sym = F.concat(self.mem_sym[c], sym)
                self.sym[s.var] = F.fold_constants(sym)
                if self.opts.memory_overapprox and self.tainted(s.addr):
                    t = any(self.mem_taint)
                else:
                    t = any(self.mem_taint[c] for c in cells)
                self.taint[s.var] = self._assign_taint(t)
            elif isinstance(s, Store):
                self.trace.steps.append((s.line, "store"))
                nbytes = s.value.width // 8
                a = self._address(s.addr, nbytes, s.line, "store")
                v = self.value(s.value, s.line)
                sym = self.symbolic(s.value)
                t = self.tainted(s.value)
                spread = self.opts.memory_overapprox and self.tainted(s.addr)
                if spread:
                    self.mem_taint = [m or t for m in self.mem_taint]
                for i in range(nbytes):
                    self.mem_conc[a + i] = (v >> (8 * i)) & 0xFF
                    self.mem_sym[a + i] = F.fold_constants(F.extract(8 * i + 7, 8 * i, sym))
                    if not spread:
                        self.mem_taint[a + i] = t
            elif isinstance(s, If):
                taken = bool(self.value(s.cond, s.line))
                self.trace.steps.append((s.line, "then" if taken else "else"))
                cond = self.symbolic(s.cond)
                cond = cond if taken else F.not_(cond)
                if not F.is_ground(cond):
                    self.constraints.append(cond)
                pinned = _pinned_var(s.cond) if taken else None
                if self.opts.suppression and pinned is not None:
                    self.taint[pinned] = False
                self.cf_taint.append(self.tainted(s.cond))
                try:
                    self.run(s.then if taken else s.orelse)
                finally:
                    self.cf_taint.pop()
            elif isinstance(s, Repeat):
                self.trace.steps.append((s.line, f"repeat {s.count}"))
                for _ in range(s.count):
                    self.run(s.body)
            elif isinstance(s, Sink):
                self.trace.steps.append((s.line, f"sink {s.label}"))
                self._sink(s)
            else:  # pragma: no cover - parser only builds the classes above
                raise TypeError(f"unknown statement {s!r}")

    def _sink(self, s: Sink) -> None:
        k = self.hits.get(s.label, 0) + 1
        self.hits[s.label] = k
        label = s.label if k == 1 else f"{s.label}#{k}"
        value = self.value(s.expr, s.line)
        expr = self.symbolic(s.expr)
        state = SymbolicState(self.program.inputs, tuple(self.constraints))
        target = TargetSpec(expr, offset=s.offset, label=label)
        self.trace.sinks.append(SinkHit(label, s.line, value, state, target,
                                        self.tainted(s.expr)))


def _suppressed(expr: Term) -> bool:
    """Local rules that reduce an expression to a single value."""
    if expr.op == "bvmul" and any(a.op == "const" and a.value == 0 for a in expr.args):
        return True
    if expr.op in ("bvsub", "bvxor") and expr.args[0] == expr.args[1]:
        return True
    if expr.op == "bvand" and any(a.op == "const" and a.value == 0 for a in expr.args):
        return True
    return False


def _pinned_var(cond: Term) -> str | None:
    """Variable v for a condition ``v = const`` (either side)."""
    if cond.op != "=":
        return None
    a, b = cond.args
    if a.op == "var" and b.op == "const":
        return a.name
    if b.op == "var" and a.op == "const":
        return b.name
    return None


def run(program: ToyProgram, inputs: Mapping[str, int],
        taint: TaintOptions | None = None) -> ConcreteTrace:
    m = _Machine(program, inputs, taint or TaintOptions())
    try:
        m.run(program.body)
    except _Halt:
        pass
    m.trace.store = dict(m.conc)
    m.trace.memory = bytes(m.mem_conc)
    return m.trace


def execute_concrete(program: ToyProgram, inputs: Mapping[str, int]) -> ConcreteTrace:
    return run(program, inputs)


def symbolic_single_path(program: ToyProgram, inputs: Mapping[str, int],
                         sink: str | None = None) -> dict[str, tuple[SymbolicState, TargetSpec]]:
    """Path constraint and target for every sink reached by ``inputs``."""
    trace = run(program, inputs)
    if sink is not None:
        hit = trace.sink(sink)
        return {hit.label: (hit.state, hit.target)}
    if not trace.sinks:
        where = f" (trapped at line {trace.trap.line})" if trace.trap else ""
        raise SinkNotReached(f"no sink reached under the given input{where}")
    return {h.label: (h.state, h.target) for h in trace.sinks}


def taint_propagate(program: ToyProgram, inputs: Mapping[str, int],
                    options: TaintOptions | None = None) -> dict[str, bool]:
    trace = run(program, inputs, options)
    return {h.label: h.tainted for h in trace.sinks}
