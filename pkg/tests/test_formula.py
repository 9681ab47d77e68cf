import pytest

from ctrldom import formula as F
from ctrldom.formula import (FormulaError, SymbolicState, TargetSpec, UndeclaredError, WidthError,
                             conjoin, duplicate, merge_states)
from ctrldom.smt2 import SmtSyntaxError, parse_smt2, serialize_smt2
from ctrldom.solver import make_solver

from conftest import x8
import oracles


def test_parse_minimal():
    state, target = parse_smt2("(declare-const x (_ BitVec 8)) (assert (bvule x #x29))\n"
                               "; ctrl-target: x width=8\n")
    assert state.inputs == (("x", 8),)
    assert len(state.constraints) == 1
    assert target.width == 8 and target.expr == F.var("x", 8)


def test_parse_undeclared():
    with pytest.raises(UndeclaredError):
        parse_smt2("(declare-const y (_ BitVec 8)) (assert (bvult x y))\n; ctrl-target: y width=8\n")


def test_parse_missing_target():
    with pytest.raises(FormulaError):
        parse_smt2("(declare-const x (_ BitVec 8))")


def test_parse_syntax_error_has_position():
    with pytest.raises(SmtSyntaxError, match="line"):
        parse_smt2("(declare-const x (_ BitVec 8)\n; ctrl-target: x width=8\n")


def test_width_mismatch_rejected():
    with pytest.raises(WidthError):
        F.var("x", 8) + F.var("y", 16)


def test_motex2_file_feasible_set(data_dir):
    state, target = parse_smt2((data_dir / "motex2_8bit.smt2").read_text())
    assert oracles.feasible(state, target) == list(range(17, 42))
    assert target.offset == -16 and target.label == "memcpy_size"


def test_serialize_empty_state():
    assert serialize_smt2(SymbolicState()) == "(set-logic QF_BV)\n"


def test_round_trip_preserves_feasible_set(data_dir):
    for name in ("motex2_8bit.smt2", "even_8bit.smt2", "unsat_8bit.smt2"):
        state, target = parse_smt2((data_dir / name).read_text())
        again = parse_smt2(serialize_smt2(state, target=target))
        assert oracles.feasible(*again) == oracles.feasible(state, target)
        assert again[1].offset == target.offset


def test_serialize_modular_unique_model():
    state, target = x8(lambda x: (x + 1).eq(0))
    text = serialize_smt2(state, target=target)
    again, t = parse_smt2(text)
    assert oracles.feasible(again, t) == [255]


def test_duplicate_renames():
    state, target = x8(lambda x: x.ule(41))
    d_state, d_target = duplicate(state, target)
    assert not (d_state.names & state.names)
    assert oracles.feasible(d_state, d_target) == list(range(42))


def test_duplicate_single_valued_unsat():
    state, target = x8(lambda x: x.eq(7))
    d_state, d_target = duplicate(state, target)
    both = conjoin(merge_states(state, d_state), F.not_(F.eq(target.expr, d_target.expr)))
    assert not oracles.satisfiable(both)


def test_duplicate_unconstrained_sat():
    state, target = x8()
    d_state, d_target = duplicate(state, target)
    both = conjoin(merge_states(state, d_state), F.not_(F.eq(target.expr, d_target.expr)))
    v = make_solver().check_sat(both)
    assert v.is_sat
    assert v.model["x"] != v.model[d_target.expr.name]


def test_conjoin():
    state, target = x8()
    x = target.expr
    assert oracles.feasible(conjoin(state, x.uge(1), x.ule(41)), target) == list(range(1, 42))
    even = conjoin(state, (x & 1).eq(0))
    assert oracles.feasible(conjoin(even, x.uge(1), x.ule(41)), target) == list(range(2, 41, 2))
    assert oracles.feasible(conjoin(state, F.FALSE), target) == []


def test_conjoin_rejects_bitvector():
    state, target = x8()
    with pytest.raises(WidthError):
        conjoin(state, target.expr)


def test_target_must_be_bitvector():
    with pytest.raises(WidthError):
        TargetSpec(F.TRUE)


def test_passthrough_arrays_kept(data_dir):
    text = ("(declare-const a (Array (_ BitVec 8) (_ BitVec 8)))\n"
            "(declare-const x (_ BitVec 8))\n(assert (= (select a x) #x01))\n"
            "(assert (bvult x #x04))\n; ctrl-target: x width=8\n")
    state, target = parse_smt2(text)
    assert len(state.passthrough) == 2
    assert len(state.constraints) == 1
    assert "select" in serialize_smt2(state)
