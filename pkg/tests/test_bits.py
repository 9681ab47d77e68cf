import pytest
from hypothesis import given, settings, strategies as st

from ctrldom.bits import count_fixed_bits, fixed_bits_runs

import oracles


def test_examples():
    assert count_fixed_bits(0, 255, 1, 0) == 128
    assert count_fixed_bits(0, 255, 0, 0) == 256
    assert count_fixed_bits(3, 9, 1, 0) == 3
    assert count_fixed_bits(0, 2**64 - 1, 2**48 - 1, 0) == 2**16


def test_bits_outside_mask_rejected():
    with pytest.raises(ValueError):
        count_fixed_bits(0, 10, 1, 2)


@st.composite
def cases(draw):
    width = draw(st.integers(1, 10))
    lo = draw(st.integers(0, (1 << width) - 1))
    hi = draw(st.integers(lo, (1 << width) - 1))
    mask = draw(st.integers(0, (1 << width) - 1))
    bits = draw(st.integers(0, (1 << width) - 1)) & mask
    return lo, hi, mask, bits


@settings(max_examples=300, deadline=None)
@given(cases())
def test_count_matches_enumeration(case):
    assert count_fixed_bits(*case) == oracles.count_fixed(*case)


@settings(max_examples=200, deadline=None)
@given(cases())
def test_runs_cover_exactly(case):
    lo, hi, mask, bits = case
    runs = list(fixed_bits_runs(lo, hi, mask, bits))
    got = [v for a, b in runs for v in range(a, b + 1)]
    assert got == [v for v in range(lo, hi + 1) if v & mask == bits]
    # maximal: consecutive runs never touch
    assert all(b + 1 < c for (_, b), (c, _) in zip(runs, runs[1:]))
