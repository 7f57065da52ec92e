import json
import subprocess
import sys

import pytest

from curvkit import report
from curvkit.cli import main


def test_verify_quick_all_passes(tmp_path, capsys):
    out = tmp_path / "r.json"
    assert main(["verify", "--suite", "all", "--quick", "--out", str(out)]) == 0
    meta, recs = report.loads(out.read_text())
    assert meta["command"] == "verify"
    assert recs and all(r.passed for r in recs if r.asserted)
    err = capsys.readouterr().err
    assert "[PASS]" in err and "[FAIL]" not in err


def test_invariants_sphere_values(capsys):
    assert main(["invariants", "--model", "sphere", "--n", "5", "--k", "2", "--quick"]) == 0
    doc = json.loads(capsys.readouterr().out)
    text = json.dumps(doc["data"])
    assert "144" in text and "30" in text


def test_lovelock_constancy_fails_with_exit_1(capsys):
    assert main(["verify", "--suite", "curvature", "--model", "lovelock", "--n", "5", "--k", "2",
                 "--eps", "1", "--mass", "0.1", "--quick"]) == 1


@pytest.mark.parametrize("argv", [
    ["verify", "--suite", "nope"],
    ["functional", "--model", "sphere", "--quick"],
    ["invariants", "--n", "five"],
])
def test_configuration_errors_exit_2(argv, capsys):
    assert main(argv) == 2


def test_payload_is_byte_identical(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    args = ["verify", "--suite", "curvature", "--quick", "--seed", "3"]
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b)]) == 0
    assert report.payload(a.read_text()) == report.payload(b.read_text())


def test_module_entry_point():
    p = subprocess.run([sys.executable, "-m", "curvkit.cli", "verify", "--suite", "algebra", "--quick", "--n", "4"],
                       capture_output=True, text=True)
    assert p.returncode == 0
    assert json.loads(p.stdout)["records"]
