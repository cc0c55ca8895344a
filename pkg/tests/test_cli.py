import csv
import io
import json
import subprocess
import sys
from pathlib import Path

import pytest

from stochdd.cli import emit_result, load_result, main, verify
from stochdd.circuit import generate_ghz, generate_qft
from stochdd.noise import NoiseSpec
from stochdd.sampler import PropertySpec, SamplingPlan, run_ensemble

DATA = Path(__file__).parent / "data" / "qasm"


def run_cli(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_noiseless_ghz_histogram(capsys):
    code, out, _ = run_cli(
        capsys, "--builtin", "ghz", "--qubits", "2", "--p-depol", "0", "--p-damp", "0", "--p-flip", "0",
        "--shots", "1000", "--seed", "7",
    )
    assert code == 0
    doc = json.loads(out)
    assert set(doc["histogram"]) == {"00", "11"}
    assert doc["M"] == 1000 and doc["seed"] == 7 and doc["n"] == 2
    assert doc["estimates"] == []


def test_default_plan_and_noise(capsys, monkeypatch):
    captured = {}

    def fake(circuit, spec, plan, props, workers, base_seed, progress):
        captured.update(circuit=circuit, spec=spec, plan=plan)
        return run_ensemble(circuit, spec, SamplingPlan(num_runs=3), props)

    monkeypatch.setattr("stochdd.cli.run_ensemble", fake)
    code, out, _ = run_cli(capsys, "--builtin", "qft", "--qubits", "16")
    assert code == 0
    assert captured["plan"].num_runs == 26_492
    assert (captured["spec"].p_depol, captured["spec"].p_damp, captured["spec"].p_flip) == (0.001, 0.002, 0.001)
    assert captured["spec"].policy == "operands-only"
    assert captured["circuit"].num_qubits == 16


def test_planned_run_count_reported(capsys):
    code, out, _ = run_cli(
        capsys, "--builtin", "ghz", "--qubits", "3", "--eps", "0.1", "--delta", "0.05", "--num-properties", "10",
        "--reproducible",
    )
    assert code == 0
    assert json.loads(out)["M"] == SamplingPlan(10, 0.1, 0.05).num_runs


def test_json_is_sorted_with_17_digits(capsys):
    code, out, _ = run_cli(capsys, "--builtin", "ghz", "--qubits", "3", "--shots", "50", "--property", "000")
    doc = json.loads(out)
    assert list(doc) == sorted(doc)
    assert '"value": 0.' in out
    value_text = out.split('"value": ')[1].split(",")[0].rstrip("}]")
    assert len(value_text.replace("0.", "", 1).lstrip("0")) == 17
    assert doc["estimates"][0]["label"] == "P(000)"
    assert set(doc["estimates"][0]) == {"label", "value", "hoeffding_halfwidth", "stderr"}


def test_byte_identical_across_workers(capsys):
    outs = []
    for w in ("1", "2", "4"):
        code, out, _ = run_cli(
            capsys, "--builtin", "ghz", "--qubits", "5", "--shots", "200", "--seed", "3", "--workers", w,
            "--all-basis", "--reproducible",
        )
        assert code == 0
        outs.append(out)
    assert outs[0] == outs[1] == outs[2]


def test_csv_output(capsys, tmp_path):
    target = tmp_path / "r.csv"
    code, out, _ = run_cli(capsys, "--builtin", "ghz", "--qubits", "2", "--shots", "20", "--format", "csv",
                           "--property", "11", "--out", str(target))
    assert code == 0 and out == ""
    rows = list(csv.reader(io.StringIO(target.read_text())))
    assert rows[0] == ["kind", "key", "value", "hoeffding_halfwidth", "stderr"]
    hist = {r[1]: int(r[2]) for r in rows if r[0] == "histogram"}
    assert sum(hist.values()) == 20
    assert [r[1] for r in rows if r[0] == "estimate"] == ["P(11)"]


def test_qasm_input_and_verify(capsys):
    code, out, _ = run_cli(capsys, "--circuit", str(DATA / "qft4.qasm"), "--verify", "--qubits-max", "8")
    assert code == 0
    doc = json.loads(out)
    assert doc["ok"] is True and doc["max_abs_error"] <= 1e-8


@pytest.mark.parametrize("n", range(1, 11))
def test_verify_never_fails_on_builtins(n):
    assert verify(generate_ghz(n)) <= 1e-8
    assert verify(generate_qft(n)) <= 1e-8


def test_verify_refuses_large_registers(capsys):
    code, _, err = run_cli(capsys, "--builtin", "ghz", "--qubits", "12", "--verify")
    assert code == 4 and "limited" in err


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["--builtin", "ghz"],
        ["--builtin", "ghz", "--qubits", "2", "--circuit", "x.qasm"],
        ["--builtin", "ghz", "--qubits", "2", "--p-depol", "2"],
        ["--builtin", "ghz", "--qubits", "2", "--eps", "0"],
        ["--builtin", "ghz", "--qubits", "2", "--shots", "0"],
        ["--builtin", "ghz", "--qubits", "2", "--property", "012"],
        ["--builtin", "nope", "--qubits", "2"],
        ["--builtin", "ghz", "--qubits", "2", "--workers", "0"],
    ],
)
def test_bad_flags_exit_2(capsys, argv):
    code, out, err = run_cli(capsys, *argv)
    assert code == 2
    assert out == "" and err.startswith("stochdd: error")


def test_parse_errors_exit_3(capsys, tmp_path):
    code, _, err = run_cli(capsys, "--circuit", str(DATA / "unsupported" / "if_statement.qasm"))
    assert code == 3 and "line 5" in err
    bad = tmp_path / "bad.qasm"
    bad.write_text("OPENQASM 2.0;\nqreg q[2];\ncx q[0],q[0];\n")
    code, _, err = run_cli(capsys, "--circuit", str(bad))
    assert code == 3 and "overlap" in err
    code, _, _ = run_cli(capsys, "--circuit", str(tmp_path / "missing.qasm"))
    assert code == 3


def test_runtime_errors_exit_4(capsys, monkeypatch):
    from stochdd.errors import NumericDegeneracyError

    def boom(*a, **k):
        raise NumericDegeneracyError("drift")

    monkeypatch.setattr("stochdd.cli.run_ensemble", boom)
    code, _, err = run_cli(capsys, "--builtin", "ghz", "--qubits", "2", "--shots", "2")
    assert code == 4 and "drift" in err


def test_progress_goes_to_stderr(capsys):
    code, out, err = run_cli(capsys, "--builtin", "ghz", "--qubits", "2", "--shots", "30", "--progress")
    assert code == 0 and "runs 30/30" in err
    json.loads(out)


def test_emit_result_round_trip():
    props = [PropertySpec.outcome("000"), PropertySpec.outcome("111")]
    agg = run_ensemble(generate_ghz(3), NoiseSpec(0.05, 0.05, 0.05), SamplingPlan(num_runs=40), props, base_seed=8)
    back = load_result(emit_result(agg))
    assert back.same_result(agg)
    assert back.noise == agg.noise and back.num_qubits == 3


def test_emit_result_single_run_has_null_stderr():
    agg = run_ensemble(generate_ghz(2), NoiseSpec(), SamplingPlan(num_runs=1), [PropertySpec.outcome("00")])
    doc = json.loads(emit_result(agg))
    assert doc["estimates"][0]["stderr"] is None


def test_console_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "stochdd", "--builtin", "ghz", "--qubits", "2", "--shots", "5", "--reproducible"],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["workers"] is None
