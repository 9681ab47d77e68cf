"""Bitvector terms, symbolic states and analysis targets.

Terms are immutable, hash-consed-ish trees (structural equality, cached
hash) so they can key memo tables in the solvers.  Boolean-sorted terms
use width ``BOOL`` (0).  All bitvector values are unsigned Python ints
reduced modulo ``2**width``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping

BOOL = 0

BV_BINARY = frozenset(
    {"bvadd", "bvsub", "bvmul", "bvudiv", "bvurem", "bvand", "bvor", "bvxor",
     "bvshl", "bvlshr", "bvashr"}
)
BV_UNARY = frozenset({"bvneg", "bvnot"})
BV_PREDICATES = frozenset(
    {"bvult", "bvule", "bvugt", "bvuge", "bvslt", "bvsle", "bvsgt", "bvsge"}
)
BOOL_NARY = frozenset({"and", "or"})


class FormulaError(ValueError):
    """Base class for malformed terms and states."""


class WidthError(FormulaError):
    pass


class UndeclaredError(FormulaError):
    pass


class UnsupportedError(FormulaError):
    pass


def mask_of(width: int) -> int:
    return (1 << width) - 1


@dataclass(frozen=True, repr=False)
class Term:
    op: str
    args: tuple["Term", ...] = ()
    params: tuple = ()
    width: int = BOOL
    _hash: int = field(default=0, compare=False, init=False)

    def __post_init__(self):
        object.__setattr__(self, "_hash", hash((self.op, self.args, self.params, self.width)))

    def __hash__(self) -> int:
        return self._hash

    @property
    def is_bool(self) -> bool:
        return self.width == BOOL

    @property
    def name(self) -> str:
        if self.op != "var":
            raise AttributeError("only variables have a name")
        return self.params[0]

    @property
    def value(self) -> int | bool:
        if self.op == "const":
            return self.params[0]
        if self.op in ("true", "false"):
            return self.op == "true"
        raise AttributeError("not a constant")

    def __repr__(self) -> str:
        from .smt2 import term_to_smt2

        return f"Term({term_to_smt2(self)})"

    # Builder sugar.  ``==`` stays structural equality; use .eq() for terms.
    def _coerce(self, other) -> "Term":
        if isinstance(other, Term):
            return other
        if isinstance(other, bool):
            return TRUE if other else FALSE
        return const(other, self.width)

    def __add__(self, o): return binop("bvadd", self, self._coerce(o))
    def __radd__(self, o): return binop("bvadd", self._coerce(o), self)
    def __sub__(self, o): return binop("bvsub", self, self._coerce(o))
    def __rsub__(self, o): return binop("bvsub", self._coerce(o), self)
    def __mul__(self, o): return binop("bvmul", self, self._coerce(o))
    def __rmul__(self, o): return binop("bvmul", self._coerce(o), self)
    def __lshift__(self, o): return binop("bvshl", self, self._coerce(o))
    def __rshift__(self, o): return binop("bvlshr", self, self._coerce(o))
    def __xor__(self, o): return binop("bvxor", self, self._coerce(o))

    def __and__(self, o):
        o = self._coerce(o)
        return and_(self, o) if self.is_bool else binop("bvand", self, o)

    def __or__(self, o):
        o = self._coerce(o)
        return or_(self, o) if self.is_bool else binop("bvor", self, o)

    def __invert__(self):
        return not_(self) if self.is_bool else unop("bvnot", self)

    def eq(self, o): return eq(self, self._coerce(o))
    def ne(self, o): return not_(eq(self, self._coerce(o)))
    def ult(self, o): return binop("bvult", self, self._coerce(o))
    def ule(self, o): return binop("bvule", self, self._coerce(o))
    def ugt(self, o): return binop("bvugt", self, self._coerce(o))
    def uge(self, o): return binop("bvuge", self, self._coerce(o))
    def slt(self, o): return binop("bvslt", self, self._coerce(o))
    def sle(self, o): return binop("bvsle", self, self._coerce(o))


TRUE = Term("true")
FALSE = Term("false")


def var(name: str, width: int) -> Term:
    if width <= 0:
        raise WidthError(f"variable {name!r} needs a positive width")
    return Term("var", (), (name,), width)


def const(value: int, width: int) -> Term:
    if width <= 0:
        raise WidthError("constants need a positive width")
    return Term("const", (), (int(value) & mask_of(width),), width)


def boolean(value: bool) -> Term:
    return TRUE if value else FALSE


def _require_bv(op: str, *terms: Term) -> None:
    for t in terms:
        if t.is_bool:
            raise WidthError(f"{op}: expected a bitvector operand")


def _require_bool(op: str, *terms: Term) -> None:
    for t in terms:
        if not t.is_bool:
            raise WidthError(f"{op}: expected a boolean operand")


def binop(op: str, a: Term, b: Term) -> Term:
    if op in BV_BINARY or op in BV_PREDICATES:
        _require_bv(op, a, b)
        if a.width != b.width:
            raise WidthError(f"{op}: operand widths differ ({a.width} vs {b.width})")
        return Term(op, (a, b), (), a.width if op in BV_BINARY else BOOL)
    if op == "=":
        return eq(a, b)
    if op == "distinct":
        return not_(eq(a, b))
    if op == "=>":
        _require_bool(op, a, b)
        return Term("=>", (a, b))
    if op in BOOL_NARY:
        return and_(a, b) if op == "and" else or_(a, b)
    if op == "concat":
        return concat(a, b)
    raise UnsupportedError(f"unsupported binary operator {op!r}")


def unop(op: str, a: Term) -> Term:
    if op in BV_UNARY:
        _require_bv(op, a)
        return Term(op, (a,), (), a.width)
    if op == "not":
        return not_(a)
    raise UnsupportedError(f"unsupported unary operator {op!r}")


def eq(a: Term, b: Term) -> Term:
    if a.width != b.width:
        raise WidthError(f"=: operand widths differ ({a.width} vs {b.width})")
    return Term("=", (a, b))


def not_(a: Term) -> Term:
    _require_bool("not", a)
    if a.op == "true":
        return FALSE
    if a.op == "false":
        return TRUE
    return Term("not", (a,))


def and_(*terms: Term) -> Term:
    _require_bool("and", *terms)
    parts = [t for t in terms if t.op != "true"]
    if any(t.op == "false" for t in parts):
        return FALSE
    if not parts:
        return TRUE
    if len(parts) == 1:
        return parts[0]
    return Term("and", tuple(parts))


def or_(*terms: Term) -> Term:
    _require_bool("or", *terms)
    parts = [t for t in terms if t.op != "false"]
    if any(t.op == "true" for t in parts):
        return TRUE
    if not parts:
        return FALSE
    if len(parts) == 1:
        return parts[0]
    return Term("or", tuple(parts))


def implies(a: Term, b: Term) -> Term:
    return binop("=>", a, b)


def ite(c: Term, a: Term, b: Term) -> Term:
    _require_bool("ite", c)
    if a.width != b.width:
        raise WidthError("ite: branch widths differ")
    return Term("ite", (c, a, b), (), a.width)


def extract(hi: int, lo: int, a: Term) -> Term:
    _require_bv("extract", a)
    if not (0 <= lo <= hi < a.width):
        raise WidthError(f"extract [{hi}:{lo}] out of range for width {a.width}")
    return Term("extract", (a,), (hi, lo), hi - lo + 1)


def zero_extend(by: int, a: Term) -> Term:
    _require_bv("zero_extend", a)
    if by < 0:
        raise WidthError("negative extension")
    return a if by == 0 else Term("zero_extend", (a,), (by,), a.width + by)


def sign_extend(by: int, a: Term) -> Term:
    _require_bv("sign_extend", a)
    if by < 0:
        raise WidthError("negative extension")
    return a if by == 0 else Term("sign_extend", (a,), (by,), a.width + by)


def concat(hi: Term, lo: Term) -> Term:
    _require_bv("concat", hi, lo)
    return Term("concat", (hi, lo), (), hi.width + lo.width)


def in_range(t: Term, lo: int, hi: int) -> Term:
    """``lo <= t <= hi`` (unsigned), dropping vacuous bounds."""
    parts = []
    if lo > 0:
        parts.append(binop("bvule", const(lo, t.width), t))
    if hi < mask_of(t.width):
        parts.append(binop("bvule", t, const(hi, t.width)))
    return and_(*parts)


def fixed_bits_predicate(t: Term, mask: int, bits: int) -> Term:
    if mask == 0:
        return TRUE
    return eq(binop("bvand", t, const(mask, t.width)), const(bits, t.width))


# --------------------------------------------------------------------------
# traversal


def iter_nodes(term: Term) -> Iterator[Term]:
    """Yield every distinct node of a term DAG once (post-order)."""
    seen: set[int] = set()
    stack: list[tuple[Term, bool]] = [(term, False)]
    while stack:
        node, expanded = stack.pop()
        if id(node) in seen:
            continue
        if expanded:
            seen.add(id(node))
            yield node
        else:
            stack.append((node, True))
            stack.extend((a, False) for a in node.args if id(a) not in seen)


def free_vars(term: Term) -> dict[str, int]:
    return {n.params[0]: n.width for n in iter_nodes(term) if n.op == "var"}


def substitute(term: Term, mapping: Mapping[str, Term]) -> Term:
    """Replace variables by terms of equal width."""
    memo: dict[int, Term] = {}
    for node in iter_nodes(term):
        if node.op == "var":
            new = mapping.get(node.params[0], node)
            if new.width != node.width:
                raise WidthError(f"substitution for {node.params[0]!r} changes its width")
        elif node.args:
            args = tuple(memo[id(a)] for a in node.args)
            new = node if all(x is y for x, y in zip(args, node.args)) else Term(
                node.op, args, node.params, node.width)
        else:
            new = node
        memo[id(node)] = new
    return memo[id(term)]


def fold_constants(term: Term) -> Term:
    """Evaluate every variable-free subterm to a constant."""
    from .solver.evaluate import eval_term

    memo: dict[int, Term] = {}
    for node in iter_nodes(term):
        if node.args:
            args = tuple(memo[id(a)] for a in node.args)
            new = node if all(x is y for x, y in zip(args, node.args)) else Term(
                node.op, args, node.params, node.width)
            if all(a.op in ("const", "true", "false") for a in args):
                v = eval_term(new, {})
                new = boolean(v) if new.is_bool else const(v, new.width)
        else:
            new = node
        memo[id(node)] = new
    return memo[id(term)]


def is_ground(term: Term) -> bool:
    return term.op in ("const", "true", "false")


# --------------------------------------------------------------------------
# states and targets


@dataclass(frozen=True)
class SymbolicState:
    """A conjunction of boolean constraints over declared bitvector inputs.

    ``passthrough`` holds raw SMT-LIB2 commands (array declarations and
    asserts) that are only ever forwarded to an external solver.
    """

    inputs: tuple[tuple[str, int], ...] = ()
    constraints: tuple[Term, ...] = ()
    passthrough: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple((str(n), int(w)) for n, w in self.inputs))
        object.__setattr__(self, "constraints", tuple(self.constraints))
        object.__setattr__(self, "passthrough", tuple(self.passthrough))
        declared = dict(self.inputs)
        if len(declared) != len(self.inputs):
            raise FormulaError("duplicate input declaration")
        for c in self.constraints:
            if not c.is_bool:
                raise WidthError("constraints must be boolean")
            check_declared(c, declared)

    @property
    def names(self) -> set[str]:
        return {n for n, _ in self.inputs}

    @property
    def input_bits(self) -> int:
        return sum(w for _, w in self.inputs)

    def declare(self, name: str, width: int) -> "SymbolicState":
        return SymbolicState(self.inputs + ((name, width),), self.constraints, self.passthrough)


def check_declared(term: Term, declared: Mapping[str, int]) -> None:
    for name, width in free_vars(term).items():
        if name not in declared:
            raise UndeclaredError(f"undeclared variable {name!r}")
        if declared[name] != width:
            raise WidthError(f"variable {name!r} used with width {width}, declared {declared[name]}")


@dataclass(frozen=True)
class TargetSpec:
    """The analysed expression, its assumption set and scoring transform.

    ``assumption`` is a boolean term over the inputs (it may mention the
    target expression itself); ``offset`` is added to target values
    before weighting, e.g. ``-buf_size`` to score overflow sizes.
    """

    expr: Term
    assumption: Term | None = None
    offset: int = 0
    label: str = "target"

    def __post_init__(self):
        if self.expr.is_bool:
            raise WidthError("target must be a bitvector expression")
        if self.assumption is not None and not self.assumption.is_bool:
            raise WidthError("assumption must be boolean")

    @property
    def width(self) -> int:
        return self.expr.width

    @property
    def domain_size(self) -> int:
        return 1 << self.width


def conjoin(state: SymbolicState, *constraints: Term) -> SymbolicState:
    declared = dict(state.inputs)
    extra = []
    for c in constraints:
        if not c.is_bool:
            raise WidthError("conjoined constraint must be boolean")
        check_declared(c, declared)
        if c.op != "true":
            extra.append(c)
    return SymbolicState(state.inputs, state.constraints + tuple(extra), state.passthrough)


def restrict_to_assumption(state: SymbolicState, target: TargetSpec) -> SymbolicState:
    if target.assumption is None:
        return state
    return conjoin(state, target.assumption)


def fresh_names(names: Iterable[str], taken: set[str]) -> dict[str, str]:
    """Deterministic renaming ``x -> x!k`` with a monotonic, collision-checked k."""
    taken = set(taken)
    out = {}
    counter = itertools.count(1)
    for name in names:
        while True:
            candidate = f"{name}!{next(counter)}"
            if candidate not in taken:
                break
        taken.add(candidate)
        out[name] = candidate
    return out


def duplicate(state: SymbolicState, target: TargetSpec,
              taken: Iterable[str] = ()) -> tuple[SymbolicState, TargetSpec]:
    if state.passthrough:
        raise UnsupportedError("cannot duplicate states carrying passthrough array terms")
    renaming = fresh_names([n for n, _ in state.inputs], state.names | set(taken))
    mapping = {n: var(renaming[n], w) for n, w in state.inputs}
    dup_state = SymbolicState(
        tuple((renaming[n], w) for n, w in state.inputs),
        tuple(substitute(c, mapping) for c in state.constraints),
    )
    dup_target = TargetSpec(
        substitute(target.expr, mapping),
        None if target.assumption is None else substitute(target.assumption, mapping),
        target.offset,
        target.label,
    )
    return dup_state, dup_target


def merge_states(a: SymbolicState, b: SymbolicState) -> SymbolicState:
    """Conjunction of two states over disjoint inputs."""
    clash = a.names & b.names
    if clash:
        raise FormulaError(f"states share variables: {sorted(clash)}")
    return SymbolicState(a.inputs + b.inputs, a.constraints + b.constraints,
                         a.passthrough + b.passthrough)
