"""Line-oriented toy IR.

Grammar (one statement per line; ``#`` followed by a space or the end of
the line starts a comment, so ``#x..`` literals are unaffected)::

    input <name>:<width>
    mem <bytes>
    <var> := <term>
    <var> := load <addr-term> <nbytes>
    store <addr-term> <value-term>
    if <bool-term>
    else
    end
    repeat <count>
    end
    sink <label> <term> [offset=<int>]

Terms use SMT-LIB bitvector syntax (``(bvadd x #x01)``, ``#b1010``,
``(_ bv5 8)``) over inputs and previously assigned variables.  Stores
write a value's bytes little-endian; loads read ``nbytes`` bytes back.
``# fixture: <name> k=v ...`` comment lines name triggering inputs.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

from .. import formula as F
from ..formula import Term
from ..smt2 import Atom, SmtSyntaxError, parse_expression, read_sexprs


class ToySyntaxError(ValueError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class Assign:
    var: str
    expr: Term
    line: int


@dataclass(frozen=True)
class Load:
    var: str
    addr: Term
    nbytes: int
    line: int


@dataclass(frozen=True)
class Store:
    addr: Term
    value: Term
    line: int


@dataclass(frozen=True)
class If:
    cond: Term
    then: tuple
    orelse: tuple
    line: int


@dataclass(frozen=True)
class Repeat:
    count: int
    body: tuple
    line: int


@dataclass(frozen=True)
class Sink:
    label: str
    expr: Term
    offset: int
    line: int


@dataclass(frozen=True)
class Trigger:
    name: str
    inputs: dict[str, int]


@dataclass(frozen=True)
class ToyProgram:
    inputs: tuple[tuple[str, int], ...]
    body: tuple
    mem_size: int = 0
    widths: dict[str, int] = field(default_factory=dict)
    triggers: tuple[Trigger, ...] = ()
    source: str = ""

    @property
    def sink_labels(self) -> list[str]:
        out: list[str] = []

        def walk(stmts):
            for s in stmts:
                if isinstance(s, Sink) and s.label not in out:
                    out.append(s.label)
                elif isinstance(s, If):
                    walk(s.then)
                    walk(s.orelse)
                elif isinstance(s, Repeat):
                    walk(s.body)

        walk(self.body)
        return out


_COMMENT = re.compile(r"(?:^|(?<=\s))#(?=\s|$)")
_NAME = re.compile(r"[A-Za-z_][A-Za-z0-9_.]*$")
_OFFSET = re.compile(r"\s+offset=(-?(?:0x[0-9a-fA-F]+|\d+))\s*$")


def _term(text: str, widths: dict[str, int], lineno: int) -> Term:
    try:
        return parse_expression(text, widths)
    except (SmtSyntaxError, F.FormulaError) as exc:
        raise ToySyntaxError(str(exc), lineno) from None


def _split_terms(text: str, lineno: int) -> list:
    try:
        return read_sexprs(text)
    except SmtSyntaxError as exc:
        raise ToySyntaxError(str(exc), lineno) from None


def _define(widths: dict[str, int], var: str, width: int, lineno: int) -> None:
    if not _NAME.match(var):
        raise ToySyntaxError(f"bad variable name {var!r}", lineno)
    if widths.get(var, width) != width:
        raise ToySyntaxError(f"{var} redefined with width {width} (was {widths[var]})", lineno)
    widths[var] = width


def parse_program(text: str) -> ToyProgram:
    inputs: list[tuple[str, int]] = []
    widths: dict[str, int] = {}
    triggers: list[Trigger] = []
    mem_size = 0
    # stack of (kind, statements, header); kind in {"top", "then", "else", "repeat"}
    stack: list[list] = [["top", [], None]]

    for lineno, raw in enumerate(text.splitlines(), 1):
        stripped = raw.strip()
        if stripped.startswith("# fixture:"):
            parts = stripped[len("# fixture:"):].split()
            if not parts:
                raise ToySyntaxError("fixture line needs a name", lineno)
            try:
                values = {k: int(v, 0) for k, v in (p.split("=", 1) for p in parts[1:])}
            except ValueError:
                raise ToySyntaxError("fixture inputs must be name=int", lineno) from None
            triggers.append(Trigger(parts[0], values))
            continue
        line = _COMMENT.split(raw, 1)[0].strip()
        if not line:
            continue
        word, _, rest = line.partition(" ")
        rest = rest.strip()
        body = stack[-1][1]

        if word == "input":
            if len(stack) > 1:
                raise ToySyntaxError("inputs must be declared at top level", lineno)
            name, _, w = rest.partition(":")
            if not w.isdigit() or int(w) < 1:
                raise ToySyntaxError(f"bad input declaration {rest!r}", lineno)
            if name in widths:
                raise ToySyntaxError(f"duplicate input {name!r}", lineno)
            _define(widths, name, int(w), lineno)
            inputs.append((name, int(w)))
        elif word == "mem":
            if not rest.isdigit():
                raise ToySyntaxError("mem takes a byte count", lineno)
            mem_size = int(rest)
        elif word == "store":
            sx = _split_terms(rest, lineno)
            if len(sx) != 2:
                raise ToySyntaxError("store takes an address and a value", lineno)
            addr = _term(sx[0], widths, lineno)
            value = _term(sx[1], widths, lineno)
            if value.is_bool or value.width % 8:
                raise ToySyntaxError("stored values must be whole bytes", lineno)
            body.append(Store(addr, value, lineno))
        elif word == "if":
            cond = _term(rest, widths, lineno)
            if not cond.is_bool:
                raise ToySyntaxError("if needs a boolean condition", lineno)
            stack.append(["then", [], (cond, lineno)])
        elif word == "else":
            if stack[-1][0] != "then":
                raise ToySyntaxError("else without if", lineno)
            stack[-1].append(stack[-1][1])
            stack[-1][0], stack[-1][1] = "else", []
        elif word == "repeat":
            if not rest.isdigit():
                raise ToySyntaxError("repeat takes a constant trip count", lineno)
            stack.append(["repeat", [], (int(rest), lineno)])
        elif word == "end":
            if len(stack) == 1:
                raise ToySyntaxError("end without block", lineno)
            kind, stmts, header, *then = stack.pop()
            if kind == "repeat":
                stmt = Repeat(header[0], tuple(stmts), header[1])
            elif kind == "then":
                stmt = If(header[0], tuple(stmts), (), header[1])
            else:
                stmt = If(header[0], tuple(then[0]), tuple(stmts), header[1])
            stack[-1][1].append(stmt)
        elif word == "sink":
            offset = 0
            m = _OFFSET.search(rest)
            if m:
                offset = int(m.group(1), 0)
                rest = rest[:m.start()]
            label, _, expr_text = rest.partition(" ")
            if not label or not expr_text.strip():
                raise ToySyntaxError("sink takes a label and a term", lineno)
            expr = _term(expr_text, widths, lineno)
            if expr.is_bool:
                raise ToySyntaxError("sink term must be a bitvector", lineno)
            body.append(Sink(label, expr, offset, lineno))
        elif rest.startswith(":="):
            var = word
            rhs = rest[2:].strip()
            if rhs.startswith("load ") or rhs == "load":
                sx = _split_terms(rhs[4:], lineno)
                if len(sx) != 2 or not isinstance(sx[1], Atom) or not sx[1].text.isdigit():
                    raise ToySyntaxError("load takes an address and a byte count", lineno)
                nbytes = int(sx[1].text)
                if nbytes < 1:
                    raise ToySyntaxError("load needs at least one byte", lineno)
                addr = _term(sx[0], widths, lineno)
                _define(widths, var, 8 * nbytes, lineno)
                body.append(Load(var, addr, nbytes, lineno))
            else:
                expr = _term(rhs, widths, lineno)
                if expr.is_bool:
                    raise ToySyntaxError("variables hold bitvectors, not booleans", lineno)
                _define(widths, var, expr.width, lineno)
                body.append(Assign(var, expr, lineno))
        else:
            raise ToySyntaxError(f"unknown statement {line!r}", lineno)

    if len(stack) != 1:
        raise ToySyntaxError("missing end", stack[-1][2][1])
    return ToyProgram(tuple(inputs), tuple(stack[0][1]), mem_size, widths, tuple(triggers), text)


def load_program(path) -> ToyProgram:
    return parse_program(Path(path).read_text(encoding="utf-8"))
