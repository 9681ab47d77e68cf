"""Property suite: random small constraint systems against enumeration."""

from hypothesis import HealthCheck, given, settings, strategies as st

from ctrldom import formula as F
from ctrldom.control import (SnsConfig, brute_force_domain, check_sc, check_wc, fixed_bits,
                             merge_domains, shrink_and_split, sns_fixed_bits)
from ctrldom.formula import conjoin, duplicate, merge_states
from ctrldom.metrics import qc
from ctrldom.smt2 import parse_smt2, serialize_smt2
from ctrldom.solver import SolverConfig, eval_model, make_solver
from ctrldom.solver.base import Status

import oracles
from strategies import systems

PROP = settings(max_examples=120, deadline=None, suppress_health_check=[HealthCheck.too_slow])
SMALL = systems(max_bits=12)


@PROP
@given(SMALL)
def test_round_trip(sys_):
    state, target = sys_
    again = parse_smt2(serialize_smt2(state, target=target))
    assert oracles.feasible(*again) == oracles.feasible(state, target)


@PROP
@given(systems(max_bits=8))
def test_duplicate_independence(sys_):
    state, target = sys_
    d_state, _ = duplicate(state, target)
    assert not (d_state.names & state.names)
    both = merge_states(state, d_state)
    assert make_solver().check_sat(both).is_sat == oracles.satisfiable(state)


@PROP
@given(SMALL, st.data())
def test_conjoin_monotone(sys_, data):
    state, target = sys_
    extra = data.draw(systems(max_bits=12)).__getitem__(0)
    c = F.binop("bvule", target.expr, F.const(data.draw(st.integers(0, 255)) & F.mask_of(target.width),
                                                 target.width))
    assert set(oracles.feasible(conjoin(state, c), target)) <= set(oracles.feasible(state, target))


@PROP
@given(SMALL, st.sampled_from(["native", "binary-search"]))
def test_solver_against_enumeration(sys_, mode):
    state, target = sys_
    s = make_solver(SolverConfig(optimization=mode))
    truth = oracles.feasible(state, target)
    v = s.check_sat(state)
    assert v.is_sat == bool(truth)
    if truth:
        assert all(eval_model(v.model, c) for c in state.constraints)
        assert s.minimize(state, target.expr).value == truth[0]
        assert s.maximize(state, target.expr).value == truth[-1]
    else:
        assert s.minimize(state, target.expr).status is Status.UNSAT
    hi = F.mask_of(target.width)
    sc = s.sc_counterexample(state, target.expr, (0, hi))
    assert sc.strong == (len(truth) == hi + 1)
    if not sc.strong:
        assert sc.value not in truth


@PROP
@given(SMALL)
def test_fixed_bits_against_enumeration(sys_):
    state, target = sys_
    truth = oracles.feasible(state, target)
    fb = fixed_bits(state, target)
    if not truth:
        return
    full = F.mask_of(target.width)
    want_mask = full
    for v in truth:
        want_mask &= ~(v ^ truth[0])
    free = full & ~want_mask
    witnessed = any(v ^ free in set(truth) for v in truth)
    if witnessed:
        assert fb.mask == want_mask & full and fb.bits == truth[0] & want_mask
    else:
        # no feasible pair differs on every free bit: the query reports failure
        assert fb is None


@PROP
@given(SMALL, st.integers(0, 6), st.booleans())
def test_soundness_sandwich(sys_, limit, use_fb):
    state, target = sys_
    truth = set(oracles.feasible(state, target))
    cfg = SnsConfig(split_limit=limit)
    d = sns_fixed_bits(state, target, cfg) if use_fb else shrink_and_split(state, target, cfg)
    assert oracles.represented(d, strong_only=True) <= truth <= oracles.represented(d)
    assert d.splits_used <= limit
    if d.exact:
        assert oracles.represented(d) == truth


@PROP
@given(SMALL)
def test_exact_run_and_bridges(sys_):
    state, target = sys_
    truth = oracles.feasible(state, target)
    d = shrink_and_split(state, target, SnsConfig(split_limit=10_000))
    assert d.exact and oracles.represented(d) == set(truth)
    gaps = sum(1 for a, b in zip(d.intervals, d.intervals[1:]))
    assert gaps <= d.splits_used
    wc, sc = check_wc(state, target), check_sc(state, target).holds
    assert wc == (len(truth) > 1) == (qc(d) > 0)
    assert sc == d.is_full
    if sc:
        assert wc


@PROP
@given(SMALL, SMALL)
def test_merge_is_union(a, b):
    (sa, ta), (sb, tb) = a, b
    if ta.width != tb.width:
        return
    da, db = sns_fixed_bits(sa, ta), brute_force_domain(sb, tb)
    m = merge_domains(da, db)
    assert oracles.represented(m) == oracles.represented(da) | oracles.represented(db)
    assert oracles.represented(m, True) >= oracles.represented(da, True) | oracles.represented(db, True)


@PROP
@given(SMALL)
def test_determinism(sys_):
    state, target = sys_
    assert shrink_and_split(state, target) == shrink_and_split(state, target)
