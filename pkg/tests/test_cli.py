import json
import shutil
import subprocess
import sys

import pytest

from stackycert.cli import dispatch


def run(argv, capsys):
    code = dispatch(argv)
    out, err = capsys.readouterr()
    return code, out, err


def has_float(node):
    if isinstance(node, float):
        return True
    if isinstance(node, dict):
        return any(has_float(v) for v in node.values())
    if isinstance(node, list):
        return any(has_float(v) for v in node)
    return False


def test_construct_over_q(tmp_path, capsys):
    out = tmp_path / "c.json"
    code, _, _ = run(["construct", "--bound", "100", "--out", str(out)], capsys)
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["p"] == ["5"] and doc["q"] == ["3"]
    assert not has_float(doc)


def test_construct_to_stdout_is_deterministic(capsys):
    code, first, _ = run(["construct"], capsys)
    assert code == 0
    _, second, _ = run(["construct"], capsys)
    assert first == second


def test_verify_accepts_and_rejects(tmp_path, capsys):
    out = tmp_path / "c.json"
    run(["construct", "--field", "x^2+1", "--out", str(out)], capsys)
    code, text, _ = run(["verify", "--cert", str(out)], capsys)
    assert code == 0 and json.loads(text) == {"verdict": "accepted"}
    doc = json.loads(out.read_text())
    doc["genus"]["den"] = "3"
    out.write_text(json.dumps(doc))
    code, text, _ = run(["verify", "--cert", str(out)], capsys)
    assert code == 1 and json.loads(text) == {"verdict": "rejected", "reason": "genus mismatch"}


def test_explicit_pair_that_fails_is_inconclusive(capsys):
    code, out, err = run(["construct", "--p", "5", "--q", "11"], capsys)
    assert code == 2 and out == "" and "inconclusive" in err


def test_explicit_pair_that_works(capsys):
    code, out, _ = run(["construct", "--p", "13", "--q", "5"], capsys)
    assert code == 0 and json.loads(out)["p"] == ["13"]


def test_search_exhausted(capsys):
    assert run(["construct", "--bound", "3"], capsys)[0] == 2


@pytest.mark.parametrize(
    "argv",
    [
        ["construct", "--field", "x^2-1"],
        ["construct", "--bound", "1"],
        ["verify", "--cert", "/nonexistent/cert.json"],
        ["verify"],
        ["bogus"],
        ["genus", "--p", "6", "--q", "3"],
        ["hilbert", "--p", "0", "--q", "3"],
        ["hilbert", "--p", "5", "--q", "3", "--place", "two"],
    ],
)
def test_input_errors(argv, capsys):
    assert run(argv, capsys)[0] == 3


def test_malformed_certificate_is_input_error(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    assert run(["verify", "--cert", str(bad)], capsys)[0] == 3


def test_genus_command(capsys):
    code, out, _ = run(["genus", "--p", "5", "--q", "3"], capsys)
    assert code == 0
    assert json.loads(out) == {"genus": {"num": "1", "den": "2"}, "coarse_genus": "0",
                               "stacky_points": [["2", "1"], ["2", "1"]]}


def test_hilbert_command(capsys):
    code, out, _ = run(["hilbert", "--p", "5", "--q", "3"], capsys)
    assert code == 0
    symbols = [row["symbol"] for row in json.loads(out)]
    assert symbols == ["1", "-1", "-1", "1"]
    code, out, _ = run(["hilbert", "--p", "-1", "--q", "-1", "--place", "inf"], capsys)
    assert [row["symbol"] for row in json.loads(out)] == ["-1"]


def test_local_points_command(capsys):
    code, out, _ = run(["local-points", "--p", "5", "--q", "3", "--place", "7"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert len(doc["entries"]) == 5
    pts = {e["place"].get("ell", "inf"): (e["twist"], e["point"]) for e in doc["entries"]}
    assert pts["3"] == (["5"], [["1"], ["0"], ["1"]])
    assert pts["7"] == (["3"], [["0"], ["1"], ["1"]])
    assert not has_float(doc)


def test_profile_flag(tmp_path, capsys):
    prof = tmp_path / "cubic.json"
    prof.write_text(json.dumps({"field": "x^3-2", "N": "6", "unit_generators": ["-1", "-1+t", "t", "1+t"]}))
    out = tmp_path / "c.json"
    code, _, _ = run(["construct", "--profile", str(prof), "--bound", "2000", "--out", str(out)], capsys)
    assert code == 0
    assert run(["verify", "--cert", str(out)], capsys)[0] == 0


def test_cubic_without_profile_is_input_error(capsys):
    assert run(["construct", "--field", "x^3-2"], capsys)[0] == 3


def test_thread_count_does_not_change_output(monkeypatch, capsys):
    monkeypatch.setenv("STACKY_THREADS", "1")
    _, one, _ = run(["construct", "--field", "x^2-2", "--bound", "300"], capsys)
    monkeypatch.setenv("STACKY_THREADS", "4")
    _, four, _ = run(["construct", "--field", "x^2-2", "--bound", "300"], capsys)
    assert one == four and one


def test_module_entry_point(tmp_path):
    out = tmp_path / "c.json"
    proc = subprocess.run([sys.executable, "-m", "stackycert", "construct", "--out", str(out)], capture_output=True)
    assert proc.returncode == 0
    proc = subprocess.run([sys.executable, "-m", "stackycert", "verify", "--cert", str(out)], capture_output=True)
    assert proc.returncode == 0
    proc = subprocess.run([sys.executable, "-m", "stackycert", "construct", "--p", "5", "--q", "11"], capture_output=True)
    assert proc.returncode == 2


@pytest.mark.skipif(shutil.which("stackycert") is None, reason="console script not on PATH")
def test_console_script():
    proc = subprocess.run(["stackycert", "genus", "--p", "5", "--q", "3"], capture_output=True, text=True)
    assert proc.returncode == 0 and json.loads(proc.stdout)["genus"]["den"] == "2"
