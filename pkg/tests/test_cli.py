import csv
import json
import subprocess
import sys
from pathlib import Path

import pytest

from logpencil.cli import main

FIXTURES = Path(__file__).parent / "fixtures"


def _spec(tmp_path, doc, name="spec.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def _run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip() else None)


@pytest.fixture
def exshift(tmp_path):
    return _spec(tmp_path, {"family": "exshift"})


@pytest.fixture
def verma3(tmp_path):
    return _spec(tmp_path, {"family": "verma_kz", "params": {"r": 3}}, "verma.json")


def test_flatness_pass_and_fail(verma3, capsys):
    code, rep = _run(["flatness", verma3], capsys)
    assert code == 0 and rep["passed"] and rep["residue_criterion"]["passed"]
    code, rep = _run(["flatness", str(FIXTURES / "perturbed_verma_kz3.json")], capsys)
    assert code == 1 and not rep["passed"]
    assert rep["residue_criterion"]["witness"]["flat"] and rep["point_oracle"]["witness"]


def test_monodromy_report(exshift, capsys):
    code, rep = _run(["monodromy", exshift, "--s", "0.25"], capsys)
    assert code == 0
    (gen,) = rep["generators"]
    m = [[complex(e["re"], e["im"]) for e in row] for row in gen["matrix"]]
    assert abs(m[0][0] - 1j) < 1e-9 and abs(m[0][1] - (1j - 1) / 0.25) < 1e-8
    assert rep["fixed_space_dim"] == 1
    assert rep["slice"]["kind"] == "slice monodromy"


def test_monodromy_rtol_out_of_range(exshift, capsys):
    code, rep = _run(["monodromy", exshift, "--s", "0.25", "--rtol", "1e-3"], capsys)
    assert code == 1 and "rtol" in rep["error"]


@pytest.mark.parametrize("argv", [
    ["monodromy", "{spec}", "--s", "0.1,0.2"],
    ["monodromy", "{spec}", "--s", "abc"],
    ["monodromy", "missing.json", "--s", "0.1"],
    ["scan", "{spec}", "--from", "0", "--to", "1", "--samples", "3"],
    ["shift-verify", "{spec}", "--operator", "nowhere.json"],
    ["flatness", "{bad}"],
    ["flatness", "{spec}", "--jobs", "0"],
    ["bogus"],
    [],
])
def test_usage_errors_exit_2(argv, tmp_path, exshift, capsys):
    bad = _spec(tmp_path, {"family": "dunkl", "params": {"group": "Z7"}}, "bad.json")
    argv = [a.format(spec=exshift, bad=bad) for a in argv]
    assert main(argv) == 2


def test_shift_verify(verma3, exshift, capsys):
    code, rep = _run(["shift-verify", verma3], capsys)
    assert code == 0 and len(rep["results"]) == 3
    code, rep = _run(["shift-verify", exshift, "--operator", str(FIXTURES / "exshift_broken_operator.json")], capsys)
    assert code == 1 and rep["results"][0]["witness"]["defect"]


def test_periodicity_command(tmp_path, capsys):
    spec = _spec(tmp_path, {"family": "tensor_kz", "params": {"n": 2}})
    code, rep = _run(["periodicity", spec, "--s", "0.13", "--shift", "2", "--shift", "-2"], capsys)
    assert code == 0 and rep["result"]["matched_lattice"] == [[2]]
    code, rep = _run(["periodicity", spec, "--s", "0.13", "--shift", "1"], capsys)
    assert code == 1


def test_scan_csv_and_fit(exshift, tmp_path, capsys):
    out = tmp_path / "scan.csv"
    code, rep = _run(["scan", exshift, "--from", "-2.5", "--to", "2.5", "--samples", "51", "--fit",
                      "--csv", str(out)], capsys)
    assert code == 0
    assert rep["fits"][0]["normal"] == [1] and rep["fits"][0]["resonance_consistent"]
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["s", "fixed_dim"] and len(rows) == 52


def test_seed_environment_override(verma3, tmp_path, capsys, monkeypatch):
    a = tmp_path / "a.json"
    b = tmp_path / "b.json"
    monkeypatch.setenv("PENCIL_SEED", "5")
    assert main(["monodromy", verma3, "--s", "random", "--seed", "1", "--report", str(a)]) == 0
    monkeypatch.delenv("PENCIL_SEED")
    assert main(["monodromy", verma3, "--s", "random", "--seed", "5", "--report", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert json.loads(a.read_text())["meta"]["seed"] == 5


def test_reports_are_deterministic(verma3, tmp_path):
    outs = []
    for k in range(2):
        path = tmp_path / f"r{k}.json"
        assert main(["periodicity", verma3, "--s", "0.21,-0.33,0.17", "--shift", "1,0,0", "--shift", "0,0,-1",
                     "--report", str(path)]) == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]


def test_module_entry_point(exshift):
    proc = subprocess.run([sys.executable, "-m", "logpencil", "flatness", exshift], capture_output=True, text=True)
    assert proc.returncode == 0 and json.loads(proc.stdout)["passed"]
