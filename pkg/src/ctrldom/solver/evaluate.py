"""Term evaluation: exact scalar semantics and a numpy vectorised twin.

Both follow SMT-LIB2 bitvector semantics: modular arithmetic,
``bvudiv x 0 = all-ones`` and ``bvurem x 0 = x``, shifts by >= width
yield zero (or the sign fill for ``bvashr``).
"""

from __future__ import annotations

import functools
from typing import Mapping

import numpy as np

from ..formula import Term, UnsupportedError, iter_nodes, mask_of


class UnassignedError(KeyError):
    pass


def _signed(v: int, w: int) -> int:
    return v - (1 << w) if v >> (w - 1) & 1 else v


def _apply(node: Term, a: list, env: Mapping[str, int]):
    op, w = node.op, node.width
    if op == "var":
        try:
            return env[node.params[0]] & mask_of(w)
        except KeyError:
            raise UnassignedError(node.params[0]) from None
    if op == "const":
        return node.params[0]
    if op == "true":
        return True
    if op == "false":
        return False
    m = mask_of(w) if w else 0
    if op == "bvadd":
        return (a[0] + a[1]) & m
    if op == "bvsub":
        return (a[0] - a[1]) & m
    if op == "bvmul":
        return (a[0] * a[1]) & m
    if op == "bvudiv":
        return m if a[1] == 0 else a[0] // a[1]
    if op == "bvurem":
        return a[0] if a[1] == 0 else a[0] % a[1]
    if op == "bvand":
        return a[0] & a[1]
    if op == "bvor":
        return a[0] | a[1]
    if op == "bvxor":
        return a[0] ^ a[1]
    if op == "bvshl":
        return 0 if a[1] >= w else (a[0] << a[1]) & m
    if op == "bvlshr":
        return 0 if a[1] >= w else a[0] >> a[1]
    if op == "bvashr":
        s = _signed(a[0], w)
        return (s >> min(a[1], w)) & m
    if op == "bvneg":
        return -a[0] & m
    if op == "bvnot":
        return ~a[0] & m
    if op == "extract":
        hi, lo = node.params
        return (a[0] >> lo) & mask_of(hi - lo + 1)
    if op == "zero_extend":
        return a[0]
    if op == "sign_extend":
        return _signed(a[0], node.args[0].width) & m
    if op == "concat":
        return (a[0] << node.args[1].width) | a[1]
    if op == "ite":
        return a[1] if a[0] else a[2]
    w0 = node.args[0].width if node.args else 0
    if op == "=":
        return a[0] == a[1]
    if op == "bvult":
        return a[0] < a[1]
    if op == "bvule":
        return a[0] <= a[1]
    if op == "bvugt":
        return a[0] > a[1]
    if op == "bvuge":
        return a[0] >= a[1]
    if op == "bvslt":
        return _signed(a[0], w0) < _signed(a[1], w0)
    if op == "bvsle":
        return _signed(a[0], w0) <= _signed(a[1], w0)
    if op == "bvsgt":
        return _signed(a[0], w0) > _signed(a[1], w0)
    if op == "bvsge":
        return _signed(a[0], w0) >= _signed(a[1], w0)
    if op == "not":
        return not a[0]
    if op == "and":
        return all(a)
    if op == "or":
        return any(a)
    if op == "=>":
        return (not a[0]) or a[1]
    raise UnsupportedError(f"cannot evaluate operator {op!r}")


def eval_term(term: Term, env: Mapping[str, int]) -> int | bool:
    """Evaluate ``term`` under a full assignment of its variables."""
    memo: dict[int, object] = {}
    for node in iter_nodes(term):
        memo[id(node)] = _apply(node, [memo[id(c)] for c in node.args], env)
    return memo[id(term)]


def eval_model(model: Mapping[str, int], expr: Term) -> int | bool:
    return eval_term(expr, model)


# --------------------------------------------------------------------------
# vectorised evaluation over uint64 arrays (widths <= 64)

_U = np.uint64


def _vmask(w: int):
    return _U(mask_of(w))


def _vsigned_key(x, w: int):
    # order-preserving map from signed w-bit values to unsigned ones
    return x ^ _U(1 << (w - 1))


def _vshift_left(x, s, w: int):
    ok = s < _U(w)
    return np.where(ok, (x << np.minimum(s, _U(63))) & _vmask(w), _U(0))


def _vshift_right(x, s, w: int):
    ok = s < _U(w)
    return np.where(ok, x >> np.minimum(s, _U(63)), _U(0))


def _vapply(node: Term, a: list, env: Mapping[str, np.ndarray]):
    op, w = node.op, node.width
    if w > 64 or any(c.width > 64 for c in node.args):
        raise UnsupportedError("vectorised evaluation supports widths up to 64")
    if op == "var":
        try:
            return env[node.params[0]]
        except KeyError:
            raise UnassignedError(node.params[0]) from None
    if op == "const":
        return _U(node.params[0])
    if op == "true":
        return np.True_
    if op == "false":
        return np.False_
    m = _vmask(w) if w else None
    if op == "bvadd":
        return (a[0] + a[1]) & m
    if op == "bvsub":
        return (a[0] - a[1]) & m
    if op == "bvmul":
        return (a[0] * a[1]) & m
    if op == "bvudiv":
        zero = a[1] == _U(0)
        return np.where(zero, m, a[0] // np.where(zero, _U(1), a[1]))
    if op == "bvurem":
        zero = a[1] == _U(0)
        return np.where(zero, a[0], a[0] % np.where(zero, _U(1), a[1]))
    if op == "bvand":
        return a[0] & a[1]
    if op == "bvor":
        return a[0] | a[1]
    if op == "bvxor":
        return a[0] ^ a[1]
    if op == "bvshl":
        return _vshift_left(a[0], a[1], w)
    if op == "bvlshr":
        return _vshift_right(a[0], a[1], w)
    if op == "bvashr":
        neg = (a[0] >> _U(w - 1)) & _U(1) == _U(1)
        shifted = _vshift_right(a[0], a[1], w)
        s = np.minimum(a[1], _U(w))
        fill = m ^ _vshift_right(m, s, w)
        return np.where(neg, shifted | fill, shifted)
    if op == "bvneg":
        return (~a[0] + _U(1)) & m
    if op == "bvnot":
        return ~a[0] & m
    if op == "extract":
        hi, lo = node.params
        return (a[0] >> _U(lo)) & _vmask(hi - lo + 1)
    if op == "zero_extend":
        return a[0]
    if op == "sign_extend":
        w0 = node.args[0].width
        neg = (a[0] >> _U(w0 - 1)) & _U(1) == _U(1)
        return np.where(neg, a[0] | (m ^ _vmask(w0)), a[0])
    if op == "concat":
        return (a[0] << _U(node.args[1].width)) | a[1]
    if op == "ite":
        return np.where(a[0], a[1], a[2])
    w0 = node.args[0].width if node.args else 0
    if op == "=":
        return a[0] == a[1]
    if op == "bvult":
        return a[0] < a[1]
    if op == "bvule":
        return a[0] <= a[1]
    if op == "bvugt":
        return a[0] > a[1]
    if op == "bvuge":
        return a[0] >= a[1]
    if op in ("bvslt", "bvsle", "bvsgt", "bvsge"):
        x, y = _vsigned_key(a[0], w0), _vsigned_key(a[1], w0)
        return {"bvslt": np.less, "bvsle": np.less_equal,
                "bvsgt": np.greater, "bvsge": np.greater_equal}[op](x, y)
    if op == "not":
        return np.logical_not(a[0])
    if op == "and":
        return functools.reduce(np.logical_and, a)
    if op == "or":
        return functools.reduce(np.logical_or, a)
    if op == "=>":
        return np.logical_or(np.logical_not(a[0]), a[1])
    raise UnsupportedError(f"cannot evaluate operator {op!r}")


def eval_vector(term: Term, env: Mapping[str, np.ndarray],
                cache: dict | None = None):
    """Evaluate ``term`` elementwise; ``cache`` maps terms to arrays."""
    cache = {} if cache is None else cache
    if term in cache:
        return cache[term]
    memo: dict[int, object] = {}
    stack: list[tuple[Term, bool]] = [(term, False)]
    with np.errstate(over="ignore"):
        while stack:
            node, expanded = stack.pop()
            if id(node) in memo:
                continue
            if not expanded:
                hit = cache.get(node) if node.args else None
                if hit is not None:
                    memo[id(node)] = hit
                    continue
                stack.append((node, True))
                stack.extend((c, False) for c in node.args if id(c) not in memo)
                continue
            val = _vapply(node, [memo[id(c)] for c in node.args], env)
            memo[id(node)] = val
            if node.args:
                cache[node] = val
    return memo[id(term)]
