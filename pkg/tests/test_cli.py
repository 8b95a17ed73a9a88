import json

import numpy as np
import pytest

from orbitalsim.cli import run
from orbitalsim.records import parse


def read_record(path):
    return parse(path.read_bytes())


def payload_of(path):
    return read_record(path).payload


def test_fg_shortcut_spec_example(tmp_path):
    out = tmp_path / "r.json"
    code = run(["fg-shortcut", "--qubits", "4", "--trials", "10000",
                "--seed", "7", "--out", str(out)])
    assert code == 0
    payload = payload_of(out)
    assert payload["exact_success"] == pytest.approx(0.53125, abs=1e-12)
    sigma = np.sqrt(0.53125 * (1 - 0.53125) / 10000)
    assert abs(payload["empirical_success"] - 0.53125) <= 3 * sigma


def test_grover_curve_payload(tmp_path):
    out = tmp_path / "curve.json"
    assert run(["grover-curve", "--qubits", "2", "--kmax", "3", "--out", str(out)]) == 0
    payload = payload_of(out)
    assert payload["success_probability"][0] == pytest.approx(0.25)
    assert payload["success_probability"][1] == pytest.approx(1.0)


def test_repeat_run_identical_except_wall_time(tmp_path):
    args = ["orbital-search", "--qubits", "2", "--marked", "3", "--flux", "0",
            "--trials", "1", "--seed", "1"]
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run(args + ["--out", str(a)]) == 0
    assert run(args + ["--out", str(b)]) == 0
    rec_a, rec_b = read_record(a), read_record(b)
    assert rec_a.payload == rec_b.payload
    assert rec_a.provenance == rec_b.provenance
    rec_a.config["out"] = rec_b.config["out"] = None
    assert rec_a.config == rec_b.config


def test_unknown_command_exits_2(capsys):
    assert run(["definitely-not-a-command"]) == 2
    assert run(["grover-curve", "--qubits", "2", "--bogus-flag"]) == 2


def test_marked_out_of_range_exits_2_without_output(tmp_path, capsys):
    out = tmp_path / "never.json"
    code = run(["grover-curve", "--qubits", "2", "--marked", "7", "--out", str(out)])
    assert code == 2
    assert not out.exists()
    assert "marked" in capsys.readouterr().err


def test_qubit_cap_enforced(capsys):
    assert run(["grover-curve", "--qubits", "13", "--kmax", "1"]) == 2


def test_csv_only_for_trace_commands(tmp_path, capsys):
    out = tmp_path / "never.csv"
    code = run(["fg-shortcut", "--qubits", "2", "--trials", "10",
                "--format", "csv", "--out", str(out)])
    assert code == 2
    assert not out.exists()


def test_fg_evolve_csv_output(tmp_path):
    out = tmp_path / "trace.csv"
    assert run(["fg-evolve", "--qubits", "2", "--steps", "21", "--t-max", "4.0",
                "--format", "csv", "--out", str(out)]) == 0
    lines = out.read_text().strip().split("\n")
    assert lines[0] == "t,success_probability"
    assert len(lines) == 22
    assert float(lines[1].split(",")[1]) == pytest.approx(0.25)


def test_al_converge_csv_and_values(tmp_path):
    out = tmp_path / "conv.csv"
    assert run(["al-converge", "--delta", str(np.pi / 2), "--k-list", "1,2,4",
                "--format", "csv", "--out", str(out)]) == 0
    lines = out.read_text().strip().split("\n")
    assert lines[0] == "k,overlap,residual"
    last = lines[3].split(",")
    assert float(last[1]) == pytest.approx(1.0, abs=1e-12)


def test_gate_file_flow(tmp_path):
    gates = tmp_path / "gates.json"
    x = [[[0, 0], [1, 0]], [[1, 0], [0, 0]]]
    gates.write_text(json.dumps([x, x, x]))
    out = tmp_path / "spec.json"
    assert run(["orbital-spectrum", "--gates", str(gates), "--flux", "0.3",
                "--out", str(out)]) == 0
    payload = payload_of(out)
    expected = np.sort(np.concatenate([
        2 * np.cos((alpha + 2 * np.pi * np.arange(3)) / 3 + 0.3) for alpha in (0.0, np.pi)]))
    assert np.allclose(payload["energies"], expected, atol=1e-9)
    assert payload["max_prediction_deviation"] <= 1e-7


def test_gate_file_errors_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps([[[1, 0], [0, 0]], [[0, 0], [2, 0]]]))
    out = tmp_path / "never.json"
    assert run(["orbital-spectrum", "--gates", str(bad), "--out", str(out)]) == 2
    assert not out.exists()
    assert "gate 0" in capsys.readouterr().err


def test_gates_and_qubits_mutually_exclusive(tmp_path, capsys):
    gates = tmp_path / "gates.json"
    gates.write_text(json.dumps([[[0, 0], [1, 0]], [[1, 0], [0, 0]]]))
    assert run(["orbital-verify", "--gates", str(gates), "--qubits", "2"]) == 2


def test_env_seed_fallback(tmp_path, monkeypatch):
    out_env, out_flag = tmp_path / "env.json", tmp_path / "flag.json"
    monkeypatch.setenv("ORBITALSIM_SEED", "1234")
    assert run(["fg-shortcut", "--qubits", "2", "--trials", "50", "--out", str(out_env)]) == 0
    monkeypatch.delenv("ORBITALSIM_SEED")
    assert run(["fg-shortcut", "--qubits", "2", "--trials", "50", "--seed", "1234",
                "--out", str(out_flag)]) == 0
    assert payload_of(out_env) == payload_of(out_flag)
    assert read_record(out_env).config["seed"] == 1234


def test_env_seed_must_be_integer(monkeypatch, capsys):
    monkeypatch.setenv("ORBITALSIM_SEED", "not-a-number")
    assert run(["fg-shortcut", "--qubits", "2", "--trials", "5"]) == 2


def test_record_without_out_goes_to_stdout(capsys):
    assert run(["grover-eigensystem", "--qubits", "2"]) == 0
    stdout = capsys.readouterr().out
    record_text = stdout[stdout.index("{"):]
    record = json.loads(record_text)
    assert record["command"] == "grover-eigensystem"
    assert record["payload"]["fidelity_plus_circular"] >= 1 - 4 / 4


def test_summary_line_printed(tmp_path, capsys):
    out = tmp_path / "g.json"
    assert run(["grover-orbital", "--qubits", "2", "--trials", "40", "--seed", "2",
                "--flux", "2.4", "--out", str(out)]) == 0
    stdout = capsys.readouterr().out
    assert "grover-orbital" in stdout and "reference 0.5" in stdout


def test_grover_orbital_record_contains_reference_and_exact(tmp_path):
    out = tmp_path / "g.json"
    assert run(["grover-orbital", "--qubits", "2", "--trials", "40", "--seed", "2",
                "--flux", "0", "--out", str(out)]) == 0
    record = read_record(out)
    assert record.payload["paper_reference_value"] == 0.5
    assert record.payload["exact_conditional_success"] == pytest.approx(0.25, abs=1e-9)
    assert record.provenance["paper_reference_value"] == "reference"
    assert record.provenance["empirical_success"] == "sampled"


def test_workers_flag_keeps_payload_identical(tmp_path):
    args = ["fg-shortcut", "--qubits", "3", "--trials", "200", "--seed", "9"]
    a, b = tmp_path / "w1.json", tmp_path / "w4.json"
    assert run(args + ["--out", str(a), "--workers", "1"]) == 0
    assert run(args + ["--out", str(b), "--workers", "4"]) == 0
    pa, pb = payload_of(a), payload_of(b)
    assert pa == pb


def test_orbital_verify_runs(tmp_path):
    out = tmp_path / "v.json"
    assert run(["orbital-verify", "--qubits", "2", "--flux", "2.4", "--out", str(out)]) == 0
    payload = payload_of(out)
    assert payload["max_residual_nondegenerate"] <= 1e-8
    assert payload["nondegenerate_levels_checked"] > 0


def test_help_exits_zero(capsys):
    assert run(["--help"]) == 0
    assert run(["grover-curve", "--help"]) == 0
