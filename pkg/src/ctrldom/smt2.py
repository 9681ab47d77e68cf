"""Reader and writer for the QF_BV subset of SMT-LIB2 used as input format.

Files declare bitvector constants, assert constraints and name the
analysed expression in a comment annotation::

    (declare-const x (_ BitVec 8))
    (assert (bvule x #x29))
    ; ctrl-target: x width=8
    ; ctrl-assume: (bvuge x #x01)

Array declarations and asserts mentioning arrays are kept verbatim
(passthrough) for external solvers and never interpreted here.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from . import formula as F
from .formula import (FormulaError, SymbolicState, TargetSpec, Term, UndeclaredError,
                      UnsupportedError, WidthError)


class SmtSyntaxError(FormulaError):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        super().__init__(f"{message} (line {line}, column {col})")
        self.line = line
        self.col = col


@dataclass(frozen=True)
class Atom:
    text: str
    line: int
    col: int

    def __str__(self) -> str:
        return self.text


class SList(list):
    line = 0
    col = 0


_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<comment>;[^\n]*)
  | (?P<lp>\()
  | (?P<rp>\))
  | (?P<quoted>\|[^|]*\|)
  | (?P<string>"(?:[^"]|"")*")
  | (?P<atom>[^\s()|";]+)
""", re.VERBOSE)


def tokenize(text: str):
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise SmtSyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        col = pos - line_start + 1
        if kind not in ("ws", "comment"):
            yield kind, m.group(), line, col
        chunk = m.group()
        nl = chunk.count("\n")
        if nl:
            line += nl
            line_start = pos + chunk.rindex("\n") + 1
        pos = m.end()


def read_sexprs(text: str) -> list:
    stack: list[SList] = [SList()]
    for kind, tok, line, col in tokenize(text):
        if kind == "lp":
            lst = SList()
            lst.line, lst.col = line, col
            stack.append(lst)
        elif kind == "rp":
            if len(stack) == 1:
                raise SmtSyntaxError("unbalanced ')'", line, col)
            done = stack.pop()
            stack[-1].append(done)
        else:
            if kind == "quoted":
                tok = tok[1:-1]
            stack[-1].append(Atom(tok, line, col))
    if len(stack) != 1:
        lst = stack[-1]
        raise SmtSyntaxError("unbalanced '('", lst.line, lst.col)
    return stack[0]


def _pos(sx) -> tuple[int, int]:
    return (sx.line, sx.col)


def sexpr_to_text(sx) -> str:
    if isinstance(sx, Atom):
        return sx.text
    return "(" + " ".join(sexpr_to_text(x) for x in sx) + ")"


def _err(msg: str, sx) -> SmtSyntaxError:
    return SmtSyntaxError(msg, *_pos(sx))


# --------------------------------------------------------------------------
# terms


def _parse_sort(sx) -> int | str:
    """Bitvector width, ``"Bool"``, or ``"Array"``."""
    if isinstance(sx, Atom):
        if sx.text == "Bool":
            return "Bool"
        raise _err(f"unsupported sort {sx.text}", sx)
    if len(sx) == 3 and isinstance(sx[0], Atom) and sx[0].text == "_" and str(sx[1]) == "BitVec":
        try:
            w = int(str(sx[2]))
        except ValueError:
            raise _err("bad bitvector width", sx) from None
        if w <= 0:
            raise _err("bitvector width must be positive", sx)
        return w
    if sx and isinstance(sx[0], Atom) and sx[0].text == "Array":
        return "Array"
    raise _err(f"unsupported sort {sexpr_to_text(sx)}", sx)


_ARRAY_OPS = {"select", "store"}
_CMP_CHAIN = F.BV_PREDICATES | {"="}


class _Context:
    def __init__(self):
        self.declared: dict[str, int] = {}
        self.defined: dict[str, Term] = {}
        self.arrays: set[str] = set()

    def mentions_arrays(self, sx) -> bool:
        if isinstance(sx, Atom):
            return sx.text in self.arrays or sx.text in _ARRAY_OPS
        return any(self.mentions_arrays(x) for x in sx)


def _literal(tok: Atom) -> Term | None:
    t = tok.text
    if t.startswith("#x"):
        return F.const(int(t[2:], 16), 4 * len(t[2:]))
    if t.startswith("#b"):
        return F.const(int(t[2:], 2), len(t[2:]))
    return None


def parse_term(sx, ctx: _Context, scope: dict[str, Term] | None = None) -> Term:
    scope = scope or {}
    if isinstance(sx, Atom):
        t = sx.text
        lit = _literal(sx)
        if lit is not None:
            return lit
        if t == "true":
            return F.TRUE
        if t == "false":
            return F.FALSE
        if t in scope:
            return scope[t]
        if t in ctx.defined:
            return ctx.defined[t]
        if t in ctx.declared:
            return F.var(t, ctx.declared[t])
        if t in ctx.arrays:
            raise UnsupportedError(f"array {t!r} cannot appear in an interpreted term")
        if t[0].isdigit():
            raise _err("integer literals are not bitvectors; use #x.. or (_ bvN w)", sx)
        raise UndeclaredError(f"undeclared variable {t!r} (line {sx.line}, column {sx.col})")
    if not sx:
        raise _err("empty term", sx)
    head = sx[0]
    try:
        if isinstance(head, Atom):
            op = head.text
            if op == "_":
                # (_ bvN w)
                if len(sx) == 3 and str(sx[1]).startswith("bv"):
                    return F.const(int(str(sx[1])[2:]), int(str(sx[2])))
                raise _err("unsupported indexed constant", sx)
            if op == "let":
                bindings = dict(scope)
                for b in sx[1]:
                    bindings[str(b[0])] = parse_term(b[1], ctx, scope)
                return parse_term(sx[2], ctx, bindings)
            if op in ("forall", "exists"):
                raise UnsupportedError("quantifiers are not accepted in input files")
            if op in _ARRAY_OPS:
                raise UnsupportedError(f"array operator {op!r} is passthrough-only")
            args = [parse_term(a, ctx, scope) for a in sx[1:]]
            return _build(op, args, sx)
        # indexed operator application ((_ extract i j) t)
        if isinstance(head, SList) and head and str(head[0]) == "_":
            name = str(head[1])
            idx = [int(str(x)) for x in head[2:]]
            args = [parse_term(a, ctx, scope) for a in sx[1:]]
            if len(args) != 1:
                raise _err(f"{name} takes one argument", sx)
            if name == "extract":
                return F.extract(idx[0], idx[1], args[0])
            if name == "zero_extend":
                return F.zero_extend(idx[0], args[0])
            if name == "sign_extend":
                return F.sign_extend(idx[0], args[0])
            raise UnsupportedError(f"unsupported indexed operator {name!r}")
    except WidthError as exc:
        raise WidthError(f"{exc} (line {sx.line}, column {sx.col})") from None
    raise _err(f"cannot parse term {sexpr_to_text(sx)}", sx)


def _build(op: str, args: list[Term], sx) -> Term:
    if op in ("bvneg", "bvnot", "not"):
        if len(args) != 1:
            raise _err(f"{op} takes one argument", sx)
        return F.unop(op, args[0])
    if op == "ite":
        if len(args) != 3:
            raise _err("ite takes three arguments", sx)
        return F.ite(*args)
    if op in ("and", "or"):
        return F.and_(*args) if op == "and" else F.or_(*args)
    if op == "=>":
        out = args[-1]
        for a in reversed(args[:-1]):
            out = F.implies(a, out)
        return out
    if op == "distinct":
        pairs = [F.not_(F.eq(a, b)) for i, a in enumerate(args) for b in args[i + 1:]]
        return F.and_(*pairs)
    if op in _CMP_CHAIN:
        if len(args) < 2:
            raise _err(f"{op} takes at least two arguments", sx)
        return F.and_(*[F.binop(op, a, b) for a, b in zip(args, args[1:])])
    if op in F.BV_BINARY or op == "concat":
        if len(args) < 2:
            raise _err(f"{op} takes at least two arguments", sx)
        out = args[0]
        for a in args[1:]:
            out = F.binop(op, out, a)
        return out
    raise UnsupportedError(f"unsupported operator {op!r} (line {sx.line}, column {sx.col})")


# --------------------------------------------------------------------------
# printing


def _const_text(value: int, width: int) -> str:
    if width % 4 == 0:
        return "#x" + format(value, f"0{width // 4}x")
    return "#b" + format(value, f"0{width}b")


def term_to_smt2(term: Term) -> str:
    out: dict[int, str] = {}
    for node in F.iter_nodes(term):
        op = node.op
        if op == "var":
            name = node.params[0]
            s = name if re.fullmatch(r"[A-Za-z~!@$%^&*_\-+=<>.?/][\w~!@$%^&*\-+=<>.?/]*", name) \
                else f"|{name}|"
        elif op == "const":
            s = _const_text(node.params[0], node.width)
        elif op in ("true", "false"):
            s = op
        else:
            args = " ".join(out[id(a)] for a in node.args)
            if op == "extract":
                s = f"((_ extract {node.params[0]} {node.params[1]}) {args})"
            elif op in ("zero_extend", "sign_extend"):
                s = f"((_ {op} {node.params[0]}) {args})"
            else:
                s = f"({op} {args})"
        out[id(node)] = s
    return out[id(term)]


def sort_text(width: int) -> str:
    return "Bool" if width == F.BOOL else f"(_ BitVec {width})"


def serialize_smt2(state: SymbolicState, extras=(), target: TargetSpec | None = None,
                   logic: str | None = None) -> str:
    """Declarations then asserts; with ``target`` the annotation comments too."""
    if logic is None:
        logic = "QF_ABV" if state.passthrough else "QF_BV"
    lines = [f"(set-logic {logic})"]
    for name, width in state.inputs:
        lines.append(f"(declare-const {term_to_smt2(F.var(name, width))} {sort_text(width)})")
    lines.extend(state.passthrough)
    for c in list(state.constraints) + list(extras):
        lines.append(f"(assert {term_to_smt2(c)})")
    if target is not None:
        lines.append(f"; ctrl-target: {term_to_smt2(target.expr)} width={target.width}")
        if target.assumption is not None:
            lines.append(f"; ctrl-assume: {term_to_smt2(target.assumption)}")
        if target.offset:
            lines.append(f"; ctrl-offset: {target.offset}")
        if target.label != "target":
            lines.append(f"; ctrl-label: {target.label}")
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# files


_ANNOT = re.compile(r"^\s*;\s*ctrl-(target|assume|offset|label)\s*:\s*(.*?)\s*$")
_WIDTH = re.compile(r"\s+width\s*=\s*(\d+)\s*$")


def parse_smt2(text: str, require_target: bool = True) -> tuple[SymbolicState, TargetSpec | None]:
    annotations: dict[str, tuple[str, int]] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        m = _ANNOT.match(raw)
        if m:
            key = m.group(1)
            if key in annotations:
                raise SmtSyntaxError(f"duplicate ctrl-{key} annotation", lineno, 1)
            annotations[key] = (m.group(2), lineno)

    ctx = _Context()
    inputs: list[tuple[str, int]] = []
    constraints: list[Term] = []
    passthrough: list[str] = []
    for cmd in read_sexprs(text):
        if isinstance(cmd, Atom) or not cmd or not isinstance(cmd[0], Atom):
            raise _err("expected a command", cmd)
        name = cmd[0].text
        if name in ("set-logic", "set-info", "set-option", "check-sat", "get-model",
                    "exit", "get-value", "get-info"):
            continue
        if name in ("declare-const", "declare-fun"):
            sym = str(cmd[1])
            if name == "declare-fun":
                if len(cmd) != 4 or len(cmd[2]) != 0:
                    raise UnsupportedError(f"only nullary declare-fun is supported ({sym})")
                sort_sx = cmd[3]
            else:
                if len(cmd) != 3:
                    raise _err("malformed declare-const", cmd)
                sort_sx = cmd[2]
            if sym in ctx.declared or sym in ctx.arrays or sym in ctx.defined:
                raise _err(f"redeclaration of {sym!r}", cmd)
            sort = _parse_sort(sort_sx)
            if sort == "Array":
                ctx.arrays.add(sym)
                passthrough.append(sexpr_to_text(cmd))
            elif sort == "Bool":
                raise UnsupportedError(f"boolean constant {sym!r} is not supported")
            else:
                ctx.declared[sym] = sort
                inputs.append((sym, sort))
        elif name == "define-fun":
            if len(cmd) != 5 or len(cmd[2]) != 0:
                raise UnsupportedError("only nullary define-fun is supported")
            sym = str(cmd[1])
            sort = _parse_sort(cmd[3])
            body = parse_term(cmd[4], ctx)
            if sort != (body.width if body.width else "Bool"):
                raise WidthError(f"define-fun {sym!r}: body sort mismatch (line {cmd.line})")
            ctx.defined[sym] = body
        elif name == "assert":
            if len(cmd) != 2:
                raise _err("assert takes one term", cmd)
            if ctx.mentions_arrays(cmd[1]):
                passthrough.append(sexpr_to_text(cmd))
                continue
            t = parse_term(cmd[1], ctx)
            if not t.is_bool:
                raise WidthError(f"asserted term is not boolean (line {cmd.line})")
            constraints.append(t)
        else:
            raise UnsupportedError(f"unsupported command {name!r} (line {cmd.line})")

    state = SymbolicState(tuple(inputs), tuple(constraints), tuple(passthrough))
    if "target" not in annotations:
        if require_target:
            raise SmtSyntaxError("missing '; ctrl-target: <term> width=<w>' annotation")
        return state, None

    body, lineno = annotations["target"]
    wm = _WIDTH.search(body)
    if wm is None:
        raise SmtSyntaxError("ctrl-target annotation needs width=<w>", lineno, 1)
    term_sx = read_sexprs(body[: wm.start()])
    if len(term_sx) != 1:
        raise SmtSyntaxError("ctrl-target must name exactly one term", lineno, 1)
    expr = parse_term(term_sx[0], ctx)
    if expr.width != int(wm.group(1)):
        raise WidthError(f"ctrl-target width={wm.group(1)} but term has width {expr.width}")
    assumption = None
    if "assume" in annotations:
        a_sx = read_sexprs(annotations["assume"][0])
        if len(a_sx) != 1:
            raise SmtSyntaxError("ctrl-assume must be one term", annotations["assume"][1], 1)
        assumption = parse_term(a_sx[0], ctx)
        if not assumption.is_bool:
            raise WidthError("ctrl-assume must be boolean")
    offset = int(annotations["offset"][0]) if "offset" in annotations else 0
    label = annotations["label"][0] if "label" in annotations else "target"
    return state, TargetSpec(expr, assumption, offset, label)


def load_smt2(path) -> tuple[SymbolicState, TargetSpec]:
    with open(path, encoding="utf-8") as fh:
        return parse_smt2(fh.read())


def parse_expression(sx, declared: dict[str, int]) -> Term:
    """Parse one term (text or s-expression) against a name -> width map."""
    if isinstance(sx, str):
        items = read_sexprs(sx)
        if len(items) != 1:
            raise SmtSyntaxError("expected exactly one term", 1, 1)
        sx = items[0]
    ctx = _Context()
    ctx.declared = dict(declared)
    return parse_term(sx, ctx)
