import csv
import io
import json

import jsonschema
import pytest

from ctrldom.analysis import RunConfig, analyze, compare, load_fixture_input, load_smt2_input
from ctrldom.control import (ControlDomain, ControlInterval, FixedBits, Guarantee, SnsConfig)
from ctrldom.report import (CSV_COLUMNS, domain_from_dict, domain_to_dict, emit_plot_data,
                            strip_runtime, validate_report)

import oracles

S, W = Guarantee.STRONG, Guarantee.WEAK


def report_for(fixture, algo="sns", **sns):
    return analyze(load_fixture_input(fixture), RunConfig(algo, SnsConfig(**sns))).to_dict()


def test_domain_round_trip_large_values():
    d = ControlDomain(64, (ControlInterval(0, 5, S), ControlInterval(2**64 - 3, 2**64 - 1, W)),
                      FixedBits(2**63, 0), False, 3, True)
    data = domain_to_dict(d)
    assert data["intervals"][1]["hi"] == str(2**64 - 1)
    assert json.loads(json.dumps(data)) == data
    assert domain_from_dict(data) == d


@pytest.mark.parametrize("fixture,algo", [("motex2-8bit", "sns"), ("mul-8bit", "snsfb"),
                                          ("holes-8bit", "newsome"), ("listing3-8bit", "brute"),
                                          ("pinned-8bit", "wc"), ("copy-8bit", "sc")])
def test_reports_validate(fixture, algo):
    validate_report(report_for(fixture, algo))


def test_schema_rejects_unknown_keys():
    data = report_for("motex2-8bit")
    data["extra"] = 1
    with pytest.raises(jsonschema.ValidationError):
        validate_report(data)


def test_reproducible_modulo_runtime():
    a, b = report_for("mixdup-16bit"), report_for("mixdup-16bit")
    assert json.dumps(strip_runtime(a), sort_keys=True) == json.dumps(strip_runtime(b), sort_keys=True)
    assert set(a["runtime"]) == {"timestamp", "wall_time_s"}


def test_report_contents():
    data = report_for("motex2-8bit")
    assert data["exact"] is True
    (t,) = data["targets"]
    assert t["domain"]["intervals"] == [{"lo": "17", "hi": "41", "guarantee": "strong"}]
    assert t["verdicts"] == {"wc": True, "sc": False, "sc_counterexample": None}
    assert t["concrete_value"] == "17" and t["offset"] == "-16"


def rows(text):
    return list(csv.reader(io.StringIO(text)))


def test_csv_single_interval():
    out = emit_plot_data(report_for("motex2-8bit"))
    assert "\r" not in out
    assert rows(out) == [list(CSV_COLUMNS), ["memcpy_size", "17", "41", "strong", "1.0"]]


def test_csv_sorted_and_fixed_bits_density():
    data = report_for("fixed-8bit", "snsfb")
    (t,) = data["targets"]
    fb = t["domain"]["fixed_bits"]
    body = rows(emit_plot_data(data))[1:]
    for _, lo, hi, g, dens in body:
        lo, hi = int(lo), int(hi)
        want = oracles.count_fixed(lo, hi, int(fb["mask"]), int(fb["bits"])) / (hi - lo + 1)
        assert float(dens) == pytest.approx(want)
    data = report_for("holes-8bit")
    body = rows(emit_plot_data(data))[1:]
    assert [int(r[1]) for r in body] == sorted(int(r[1]) for r in body)
    assert len(body) == 4


def test_csv_requires_domain():
    with pytest.raises(ValueError):
        emit_plot_data(report_for("pinned-8bit", "wc"))


def test_smt2_input_report(data_dir):
    data = analyze(load_smt2_input(data_dir / "motex2_8bit.smt2"), RunConfig()).to_dict()
    validate_report(data)
    assert data["input"]["kind"] == "smt2" and len(data["input"]["sha256"]) == 64


def test_compare_mul():
    result = compare(load_fixture_input("mul-8bit"), ["sns", "snsfb", "newsome", "brute"],
                     RunConfig())
    by = {r["algorithm"]: r for r in result["rows"]}
    assert by["snsfb"]["exact"] and not by["sns"]["exact"]
    assert by["brute"]["vs_oracle"] == "equal" and by["snsfb"]["vs_oracle"] == "equal"
    assert all(r["sound"] for r in result["rows"] if "sound" in r and r["algorithm"] != "newsome")


def test_compare_unconstrained_all_equal():
    result = compare(load_fixture_input("copy-8bit"), ["sns", "snsfb", "brute"], RunConfig())
    assert all(r["exact"] and r["vs_oracle"] == "equal" for r in result["rows"])
