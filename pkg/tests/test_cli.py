import json
import subprocess
import sys

import pytest

from ctrldom.cli import main
from ctrldom.report import validate_report

from conftest import needs_z3


def run_cli(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def write_domain(path, lo, hi, width=64, offset=0, label="t"):
    data = {"label": label, "offset": str(offset), "domain": {
        "width": width, "intervals": [{"lo": str(lo), "hi": str(hi), "guarantee": "strong"}],
        "fixed_bits": None, "exact": True, "splits_used": 0, "budget_exhausted": False}}
    path.write_text(json.dumps(data))
    return str(path)


def test_analyze_motex2(capsys):
    code, out, _ = run_cli(capsys, "analyze", "--fixture", "motex2-8bit", "--algo", "sns",
                           "--solver", "internal")
    assert code == 0
    data = json.loads(out)
    validate_report(data)
    assert data["targets"][0]["domain"]["intervals"] == [
        {"lo": "17", "hi": "41", "guarantee": "strong"}]


def test_analyze_budget_exit_2(capsys):
    code, out, _ = run_cli(capsys, "analyze", "--fixture", "mul-8bit", "--algo", "sns",
                           "--split-limit", "4")
    assert code == 2
    data = json.loads(out)
    assert data["exact"] is False
    assert data["targets"][0]["domain"]["budget_exhausted"] is True


def test_analyze_missing_file(capsys, tmp_path):
    code, _, err = run_cli(capsys, "analyze", "--smt2", str(tmp_path / "missing.smt2"))
    assert code == 1 and "error" in err


def test_analyze_unknown_fixture(capsys):
    code, _, err = run_cli(capsys, "analyze", "--fixture", "nope")
    assert code == 1


def test_analyze_budget_exceeded_is_error(capsys):
    code, _, err = run_cli(capsys, "analyze", "--fixture", "motex2-8bit", "--enum-budget", "8")
    assert code == 1 and "budget" in err.lower()


def test_analyze_bad_solver_command(capsys):
    code, _, err = run_cli(capsys, "analyze", "--fixture", "copy-8bit", "--solver", "external",
                           "--solver-cmd", "/nonexistent/solver")
    assert code == 1


@pytest.mark.parametrize("fixture", ["motex2-8bit", "mul-8bit", "holes-8bit", "listing3-8bit"])
def test_exit_code_matches_exactness(capsys, fixture):
    code, out, _ = run_cli(capsys, "analyze", "--fixture", fixture)
    assert (code == 0) == json.loads(out)["exact"]
    assert code in (0, 2)


def test_analyze_out_and_csv(capsys, tmp_path):
    out, csv_path = tmp_path / "r.json", tmp_path / "r.csv"
    code, stdout, _ = run_cli(capsys, "analyze", "--fixture", "holes-8bit", "--out", str(out),
                              "--csv", str(csv_path))
    assert code == 0 and stdout == ""
    validate_report(json.loads(out.read_text()))
    assert csv_path.read_text().splitlines()[0] == "target,lo,hi,guarantee,density"


def test_analyze_fixture_input_override(capsys):
    code, out, _ = run_cli(capsys, "analyze", "--fixture", "motex1-8bit", "--input", "header=0",
                           "--input", "input_size=7")
    assert code == 0
    assert json.loads(out)["targets"][0]["domain"]["intervals"][0]["lo"] == "248"
    code, _, _ = run_cli(capsys, "analyze", "--fixture", "motex2-8bit", "--input", "header=99")
    assert code == 1  # sink no longer reached


def test_newsome_reproducible(capsys):
    args = ("analyze", "--fixture", "holes-8bit", "--algo", "newsome", "--seed", "3")
    a, b = json.loads(run_cli(capsys, *args)[1]), json.loads(run_cli(capsys, *args)[1])
    a.pop("runtime"), b.pop("runtime")
    assert a == b


def test_score_oob_motex_pair(capsys, tmp_path):
    b = write_domain(tmp_path / "b.json", 257, 296, offset=-256, label="motex2")
    code, out, _ = run_cli(capsys, "score", "--recipe", "oob-write", "--weight", "log", "--size", b)
    res = json.loads(out)
    assert code == 0 and res["band"] == "medium"
    assert res["score"] == pytest.approx(5.36, abs=0.05)
    a = write_domain(tmp_path / "a.json", 2**64 - 40, 2**64 - 1, label="motex1")
    res = json.loads(run_cli(capsys, "score", "--recipe", "oob-write", a)[1])
    assert res["score"] == pytest.approx(0, abs=1e-6) and res["band"] == "low"


def test_score_cfh(capsys, tmp_path):
    p = write_domain(tmp_path / "p.json", 0, 2**48 - 1)
    res = json.loads(run_cli(capsys, "score", "--recipe", "cfh", p)[1])
    assert res["score"] == pytest.approx(1.0) and res["band"] == "high"


def test_score_from_report(capsys, tmp_path):
    out = tmp_path / "r.json"
    run_cli(capsys, "analyze", "--fixture", "listing3-8bit", "--out", str(out))
    code, _, err = run_cli(capsys, "score", "--recipe", "data", str(out))
    assert code == 1 and "--target" in err
    code, res, _ = run_cli(capsys, "score", "--recipe", "data", "--target", "w_diff", str(out))
    assert code == 0 and json.loads(res)["score"] == 1.0


def test_score_shape_mismatch(capsys, tmp_path):
    p = write_domain(tmp_path / "p.json", 0, 10, width=8)
    assert run_cli(capsys, "score", "--recipe", "cfh", p)[0] == 1
    assert run_cli(capsys, "score", "--recipe", "cfh")[0] == 1


def test_compare_table(capsys):
    code, out, _ = run_cli(capsys, "compare", "--fixture", "mul-8bit",
                           "--algos", "sns,snsfb,newsome,brute")
    assert code == 0
    lines = out.splitlines()
    assert lines[0].split()[:2] == ["target", "algorithm"]
    assert len(lines) == 5


def test_fixtures_listing(capsys):
    code, out, _ = run_cli(capsys, "fixtures")
    assert code == 0 and "motex2-8bit" in out


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "ctrldom", "analyze", "--fixture", "copy-8bit"],
                       capture_output=True, text=True)
    assert r.returncode == 0
    assert json.loads(r.stdout)["exact"] is True


@needs_z3
def test_external_full_width(capsys, data_dir):
    code, out, _ = run_cli(capsys, "analyze", "--smt2", str(data_dir / "motex_64bit.smt2"),
                           "--solver", "external")
    assert code == 0
    t = json.loads(out)["targets"][0]
    assert t["domain"]["intervals"] == [{"lo": "257", "hi": "296", "guarantee": "strong"}]
    assert t["scores"]["qc_bits"] == pytest.approx(5.32, abs=0.01)
