import json
import math
import xml.etree.ElementTree as ET

import pytest

from qwire.cli import main
from qwire.core import parse_schedule


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_compile_mirror_has_n_plus_one_steps(tmp_path, capsys):
    # reference value: (HBar.CZBar)^(N+1)
    path = tmp_path / "m.qws"
    code, _, _ = run(capsys, "compile", "mirror", "--sites", "7", "-o", str(path))
    assert code == 0
    sched = parse_schedule(path.read_bytes())
    assert len(sched.layers) == 16
    manifest = json.loads((tmp_path / "m.qws.manifest.json").read_text())
    assert manifest["step_composites"] == 8


def test_compile_transport_minimal(capsys):
    code, out, _ = run(capsys, "compile", "transport", "--sites", "2")
    assert code == 0 and out.startswith("qwire-schedule 1")


def test_compile_qft_manifest(tmp_path, capsys):
    path = tmp_path / "q.qws"
    assert run(capsys, "compile", "qft", "--qubits", "2", "-o", str(path))[0] == 0
    manifest = json.loads((tmp_path / "q.qws.manifest.json").read_text())
    assert manifest["cycle_count"] == 1 and manifest["qubit_order_reversed"] is True


def test_compile_gates_program(tmp_path, capsys):
    prog = tmp_path / "p.txt"
    prog.write_text("program 2\nlocalu 0 0.1 0.2 0.3\ncphase 0 1 1.0\n")
    out = tmp_path / "p.qws"
    assert run(capsys, "compile", "gates", "--program", str(prog), "-o", str(out))[0] == 0
    manifest = json.loads((tmp_path / "p.qws.manifest.json").read_text())
    assert len(manifest["program_sha256"]) == 64


def test_simulate_mirror_report(tmp_path, capsys):
    sched = tmp_path / "m.qws"
    run(capsys, "compile", "mirror", "--sites", "5", "-o", str(sched))
    report = tmp_path / "r.json"
    code, _, _ = run(capsys, "simulate", str(sched), "--seed", "3", "--expect", "mirror",
                     "--report", str(report))
    assert code == 0
    r = json.loads(report.read_text())
    assert r["fidelity"] >= 1 - 1e-9


def test_simulate_is_reproducible(tmp_path, capsys):
    sched = tmp_path / "m.qws"
    run(capsys, "compile", "mirror", "--sites", "4", "-o", str(sched))
    outs = [run(capsys, "simulate", str(sched), "--seed", "11", "--expect", "mirror")[1]
            for _ in range(2)]
    assert outs[0] == outs[1]


def test_simulate_empty_schedule_identity(tmp_path, capsys):
    sched = tmp_path / "e.qws"
    sched.write_text("qwire-schedule 1\nsites 3\nlayers 0\nend\n")
    code, out, _ = run(capsys, "simulate", str(sched), "--expect", "identity")
    assert code == 0 and json.loads(out)["fidelity"] == pytest.approx(1.0)


def test_simulate_wrong_expectation_exits_one(tmp_path, capsys):
    sched = tmp_path / "m.qws"
    run(capsys, "compile", "mirror", "--sites", "4", "-o", str(sched))
    assert run(capsys, "simulate", str(sched), "--expect", "identity")[0] == 1


def test_simulate_corrupted_schedule_is_usage_error(tmp_path, capsys):
    sched = tmp_path / "bad.qws"
    sched.write_text("qwire-schedule 1\nsites 3\nlayers 2\nlayer 0 kind=CZBar\nend\n")
    code, _, err = run(capsys, "simulate", str(sched))
    assert code == 2 and "invalid schedule" in err


def test_diagram_ascii_final_row(capsys):
    # reference value: X on site 5 of 7 lands on site 3 after N+1 steps
    code, out, _ = run(capsys, "diagram", "X@5", "--sites", "7", "--steps", "8")
    assert code == 0
    rows = out.splitlines()
    assert len(rows) == 9 and rows[-1] == "..X...."


def test_diagram_z1_two_sites(capsys):
    code, out, _ = run(capsys, "diagram", "Z@1", "--sites", "2")
    assert code == 0 and out.splitlines()[0] == "Z."


def test_diagram_svg_is_well_formed(capsys):
    code, out, _ = run(capsys, "diagram", "X@2,Z@3", "--sites", "5", "--format", "svg")
    assert code == 0
    root = ET.fromstring(out)
    assert root.tag.endswith("svg")


@pytest.mark.parametrize("spec", ["Q@1", "X@9", "X5"])
def test_diagram_bad_spec(spec, capsys):
    assert run(capsys, "diagram", spec, "--sites", "5")[0] == 2


def test_verify_single_claim(capsys):
    code, out, _ = run(capsys, "verify", "mirror-theorem")
    assert code == 0 and "[PASS]" in out and "mirror-theorem" in out


def test_verify_unknown_claim(capsys):
    code, _, err = run(capsys, "verify", "no-such-claim")
    assert code == 2 and "unknown claim" in err


@pytest.mark.parametrize("argv", [["compile", "mirror", "--sites", "1"],
                                  ["compile", "qft", "--qubits", "1"],
                                  ["compile", "gates"],
                                  ["compile", "gates", "--cphase", "0", "0", "--qubits", "2"]])
def test_compile_usage_errors(argv, capsys):
    assert run(capsys, *argv)[0] == 2
