"""Internal enumerator and external SMT process must agree."""

import os

import pytest
from hypothesis import HealthCheck, given, settings

from ctrldom.control import SnsConfig, check_sc, check_wc, fixed_bits, shrink_and_split, sns_fixed_bits
from ctrldom.solver import SolverConfig, make_solver
from ctrldom.solver.base import SolverLaunchError, Status
from ctrldom.toy import builtin_fixtures, run

from conftest import needs_z3
from strategies import systems
import oracles

pytestmark = needs_z3

EXT = SolverConfig(backend="external", timeout_ms=20_000)
SMALL = [n for n, fx in builtin_fixtures().items() if fx.input_bits <= 16]


def sinks(name):
    fx = builtin_fixtures()[name]
    return [(h.state, h.target) for h in run(fx.program, fx.inputs).sinks]


@pytest.mark.parametrize("name", SMALL)
def test_fixture_corpus_agrees(name):
    ext, internal = make_solver(EXT), make_solver()
    try:
        for state, target in sinks(name):
            assert ext.check_sat(state).status == internal.check_sat(state).status
            for opt in ("minimize", "maximize"):
                assert getattr(ext, opt)(state, target.expr).value == \
                    getattr(internal, opt)(state, target.expr).value
            assert check_wc(state, target, ext) == check_wc(state, target, internal)
            assert check_sc(state, target, solver=ext).holds == \
                check_sc(state, target, solver=internal).holds
            assert fixed_bits(state, target, ext) == fixed_bits(state, target, internal)
            cfg = SnsConfig(split_limit=20)
            truth = set(internal.enumerate_feasible(state, target.expr))
            for algo in (shrink_and_split, sns_fixed_bits):
                a, b = algo(state, target, cfg, ext), algo(state, target, cfg, internal)
                # counterexamples are any infeasible value, so only exact runs must coincide
                assert a.exact == b.exact
                if a.exact:
                    assert a == b
                assert oracles.represented(a, True) <= truth <= oracles.represented(a)
    finally:
        ext.close()


@settings(max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(systems(max_bits=12))
def test_random_systems_agree(sys_):
    state, target = sys_
    ext, internal = make_solver(EXT), make_solver()
    try:
        assert ext.check_sat(state).status == internal.check_sat(state).status
        for mode in ("native", "binary-search"):
            e = make_solver(SolverConfig("external", optimization=mode))
            assert e.minimize(state, target.expr).value == internal.minimize(state, target.expr).value
            e.close()
        assert shrink_and_split(state, target, SnsConfig(split_limit=10_000), ext) == \
            shrink_and_split(state, target, SnsConfig(split_limit=10_000), internal)
    finally:
        ext.close()


def test_unique_model_through_solver():
    from conftest import x8

    state, _ = x8(lambda x: (x + 1).eq(0))
    v = make_solver(EXT).check_sat(state)
    assert v.is_sat and v.model == {"x": 255}


def test_launch_failure():
    s = make_solver(SolverConfig("external", command="/nonexistent/solver -in"))
    from conftest import x8

    with pytest.raises(SolverLaunchError):
        s.check_sat(x8()[0])


def test_env_command(monkeypatch):
    monkeypatch.setenv("CTRL_SOLVER_CMD", "z3 -in -smt2")
    from conftest import x8

    assert make_solver(SolverConfig("external")).check_sat(x8()[0]).status is Status.SAT
