import json
import math

import mpmath
import pytest
from hypothesis import given, settings, strategies as st

from ctrldom.control import ControlDomain, ControlInterval, FixedBits, Guarantee, domain_from_values
from ctrldom.metrics import (CFH_BANDS, OOB_BANDS, Bands, ConstantWeight, DensityInfo,
                             DistanceWeight, InverseSquareWeight, InverseSqrtWeight, LogWeight,
                             ScoredDomain, band_for, builtin_weights, get_weight, load_weight, qc,
                             qc_bits, score_cfh, score_data, score_domain, score_oob, wqc,
                             wqc_constrained, wqc_exact, wqc_interval)

import oracles

M64 = 1 << 64
FOUR = ("log", "inv-square", "inv-sqrt", "constant")


def one(lo, hi, width=64, g=Guarantee.STRONG, fb=None):
    return ControlDomain(width, (ControlInterval(lo, hi, g),), fb, g is Guarantee.STRONG)


FULL8 = one(0, 255, 8)
FULL64 = one(0, M64 - 1)
EMPTY8 = ControlDomain(8, (), None, True)


def test_qc_examples():
    assert qc(FULL8) == 1.0
    assert qc_bits(one(1, 40)) == pytest.approx(5.3219, abs=1e-4)
    assert qc(one(7, 7, 8)) == 0.0
    assert qc(EMPTY8) == 0.0


@pytest.mark.parametrize("name", FOUR)
def test_full_domain_scores_one(name):
    w = get_weight(name)
    for d in (FULL8, FULL64):
        for method in ("exact", "interval", "constrained"):
            assert wqc(d, w, method) == pytest.approx(1.0, abs=1e-12)


def test_wqc_exact_log_64():
    # harmonic numbers: H_40 / H_(2^64 - 1), the latter by Euler-Maclaurin
    h40 = sum(mpmath.mpf(1) / k for k in range(1, 41))
    n = mpmath.mpf(M64 - 1)
    hfull = mpmath.log(n) + mpmath.euler + 1 / (2 * n)
    assert wqc_exact(one(1, 40), LogWeight()) == pytest.approx(float(h40 / hfull), rel=1e-12)
    assert wqc_exact(one(1, 40), LogWeight()) == pytest.approx(0.0952086, abs=1e-7)
    assert wqc_exact(one(M64 - 40, M64 - 1), LogWeight()) < 1e-18


def test_wqc_interval_log_closed_form():
    assert wqc_interval(one(1, 41), LogWeight()) == pytest.approx(math.log2(42) / 64, rel=1e-12)
    assert wqc_interval(one(1, 40), LogWeight()) == pytest.approx(0.0837118, abs=1e-7)


def test_wqc_interval_two_intervals_inverse_square():
    d = ControlDomain(8, (ControlInterval(1, 10), ControlInterval(100, 110)), None, True)
    w = InverseSquareWeight()
    integral = ((1 - 1 / 11) + (1 / 100 - 1 / 111)) / (1 - 1 / 256)
    assert wqc_interval(d, w) == pytest.approx(integral, rel=1e-12)
    exact = oracles.wqc_sum(list(range(1, 11)) + list(range(100, 111)), "inv-square", 8)
    assert wqc_exact(d, w) == pytest.approx(exact, rel=1e-12)
    # integral and sum differ by about 3.3% here (frozen measurement)
    assert abs(wqc_interval(d, w) / exact - 1) == pytest.approx(0.0332, abs=5e-4)


@pytest.mark.parametrize("name", FOUR)
def test_wqc_exact_matches_summation(name):
    values = [v for v in range(256) if v % 3 == 1 or 40 <= v <= 90]
    d = domain_from_values(8, values)
    assert wqc_exact(d, get_weight(name)) == pytest.approx(oracles.wqc_sum(values, name, 8), rel=1e-12)
    assert wqc_exact(d, get_weight(name), offset=-37) == pytest.approx(
        oracles.wqc_sum(values, name, 8, offset=-37), rel=1e-12)


def test_wqc_exact_with_fixed_bits():
    d = one(0, 254, 8, fb=FixedBits(1, 0))
    for name in FOUR:
        assert wqc_exact(d, get_weight(name)) == pytest.approx(
            oracles.wqc_sum(range(0, 256, 2), name, 8), rel=1e-12)


def test_wqc_constrained():
    d = ControlDomain(8, (ControlInterval(3, 50), ControlInterval(60, 200)), None, True)
    for name in FOUR:
        w = get_weight(name)
        assert wqc_constrained(d, w) == pytest.approx(wqc_interval(d, w), rel=1e-12)
    even = one(0, 254, 8, fb=FixedBits(1, 0))
    assert DensityInfo.from_domain(even).counts == (128,)
    assert wqc_constrained(even, ConstantWeight()) == pytest.approx(0.5)
    assert wqc_constrained(even, LogWeight()) == pytest.approx(
        wqc_interval(one(0, 254, 8), LogWeight()) * 128 / 255)
    assert wqc_constrained(d, LogWeight(), DensityInfo((0, 0))) == 0.0
    with pytest.raises(ValueError):
        wqc_constrained(d, LogWeight(), DensityInfo((1,)))


def test_weight_library():
    assert set(builtin_weights()) == {"log", "inv-square", "inv-sqrt", "constant", "cfh-valid"}
    assert float(LogWeight().mass(1, 41)) == pytest.approx(math.log2(42))
    assert float(InverseSquareWeight().mass(1, 2, exact=True)) == pytest.approx(1.25)
    assert float(InverseSquareWeight().mass(1, 2)) == pytest.approx(2 / 3)
    assert float(InverseSqrtWeight().mass(1, 3)) == pytest.approx(2 * (2 - 1))
    d = DistanceWeight(ConstantWeight(), 100)
    assert d.distance(97) == 3
    assert get_weight("distance:log:100").distance(97) == 3
    with pytest.raises(KeyError):
        get_weight("nope")


def test_distance_weight_mass_matches_summation():
    w = DistanceWeight(InverseSquareWeight(), 100)
    want = sum(float(w.omega(x)) for x in range(90, 121))
    assert float(w.mass(90, 120, exact=True)) == pytest.approx(want, rel=1e-12)


def test_piecewise_weight_from_json(tmp_path):
    spec = {"name": "valid-low", "segments": [
        {"from": "0", "to": "16", "weight": "constant", "scale": 2.0},
        {"from": "16", "to": None, "weight": "constant", "scale": 0.0}]}
    path = tmp_path / "w.json"
    path.write_text(json.dumps(spec))
    w = load_weight(path)
    assert w.name == "valid-low"
    assert float(w.mass(10, 30)) == pytest.approx(12.0)
    assert wqc(one(0, 15, 8), w) == pytest.approx(1.0)
    assert get_weight(str(path)).name == "valid-low"


def test_score_oob():
    b = ScoredDomain(one(257, 296), -256)
    a = ScoredDomain(one(M64 - 40, M64 - 1), 0)
    assert score_oob(None, b) == pytest.approx(5.3576, abs=1e-4)
    assert score_oob(None, a) < 1e-15
    assert score_oob(ScoredDomain(FULL64), ScoredDomain(FULL64)) == pytest.approx(128)
    with pytest.raises(ValueError):
        score_oob(None, None)


def test_offset_wraps():
    # {2^64 - 20 .. 2^64 - 1} and {0 .. 19} shifted by 21 give {1 .. 40}
    d = ControlDomain(64, (ControlInterval(0, 19), ControlInterval(M64 - 20, M64 - 1)), None, True)
    wrapped = ScoredDomain(d, 21)
    assert score_oob(None, wrapped) == pytest.approx(score_oob(None, ScoredDomain(one(1, 40))))


def test_score_cfh():
    assert score_cfh(ScoredDomain(one(0, 2**48 - 1))) == pytest.approx(1.0)
    assert score_cfh(ScoredDomain(one(2**48, M64 - 1))) == 0.0
    # full domain normalises to one for every weight
    assert score_cfh(ScoredDomain(FULL64)) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        score_cfh(ScoredDomain(FULL8))


def test_score_data():
    assert score_data([FULL8] * 8) == 1.0
    assert score_data([one(3, 3, 8)] * 8) == 0.0
    assert score_data([FULL8] * 4 + [one(3, 3, 8)] * 4) == 0.5
    with pytest.raises(ValueError):
        score_data([FULL8] * 9)


def test_bands():
    assert OOB_BANDS.label(0.0) == "low"
    assert OOB_BANDS.label(5.36) == "medium"
    assert OOB_BANDS.label(10.0) == "high"
    assert CFH_BANDS.label(1.0) == "high"
    assert band_for("cfh", 0.05) == "medium"
    assert band_for("data", 0.5) is None
    assert band_for("oob-write", 5.0, {"oob-write": Bands(2, 4)}) == "high"


def test_score_domain_report():
    r = score_domain(one(1, 40, 8))
    d = r.to_dict()
    assert set(d["wqc"]) == {"log", "inv-square", "inv-sqrt"}
    assert d["provenance"]["count"] == "40"


# -------------------------------------------------------------------- properties

value_sets = st.sets(st.integers(0, 255), max_size=256)


@settings(max_examples=150, deadline=None)
@given(value_sets)
def test_constant_weight_is_count_ratio(values):
    d = domain_from_values(8, values)
    assert wqc_exact(d, ConstantWeight()) == pytest.approx(len(values) / 256, abs=1e-12)
    assert wqc_interval(d, ConstantWeight()) == pytest.approx(len(values) / 256, abs=1e-12)


@settings(max_examples=150, deadline=None)
@given(value_sets, value_sets)
def test_monotone_and_normalised(a, b):
    small, big = domain_from_values(8, a), domain_from_values(8, a | b)
    assert qc(small) <= qc(big)
    for name in FOUR:
        w = get_weight(name)
        for method in ("exact", "interval", "constrained"):
            lo, hi = wqc(small, w, method), wqc(big, w, method)
            assert 0.0 <= lo <= hi + 1e-12 <= 1.0 + 1e-12
