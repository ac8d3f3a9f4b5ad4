import json
import subprocess
import sys

import pytest

from drlcheck.cli import EXIT_OK, EXIT_UNKNOWN, EXIT_USAGE, EXIT_VIOLATED, main


def run(args, tmp_path, name="r.json"):
    report = tmp_path / name
    code = main([*args, "--report", str(report), "--threads", "1"])
    return code, json.loads(report.read_text()) if report.exists() else None


def test_liveness_proved_at_two(fixtures_dir, tmp_path):
    code, rep = run(["check", "--spec", str(fixtures_dir / "aurora-mini.spec.json"),
                     "--property", str(fixtures_dir / "aurora-mini.prop.json"), "--k-max", "8"], tmp_path)
    assert code == EXIT_OK
    assert (rep["outcome"], rep["k"], rep["method"]) == ("proved", 2, "kinduction")
    assert rep["tolerances"] == {"delta_strict": 1e-6, "tau_lp": 1e-7, "tau_val": 1e-6}


def test_bmc_refutes_with_trace_file(fixtures_dir, tmp_path):
    trace = tmp_path / "trace.json"
    code, rep = run(["check", "--spec", str(fixtures_dir / "depth3.spec.json"),
                     "--property", str(fixtures_dir / "depth3.prop.json"), "--method", "bmc", "--k", "3",
                     "--trace", str(trace)], tmp_path)
    assert code == EXIT_VIOLATED and rep["outcome"] == "refuted"
    assert len(json.loads(trace.read_text())) == 3


def test_exhausted_exit_code(fixtures_dir, tmp_path):
    code, rep = run(["check", "--spec", str(fixtures_dir / "depth3.spec.json"),
                     "--property", str(fixtures_dir / "depth3.prop.json"), "--k-max", "2"], tmp_path)
    assert code == EXIT_UNKNOWN and rep["outcome"] == "exhausted"


def test_kind_method(fixtures_dir, tmp_path):
    args = ["check", "--spec", str(fixtures_dir / "stall.spec.json"),
            "--property", str(fixtures_dir / "stall.prop.json"), "--method", "kind"]
    assert run([*args, "--k", "2"], tmp_path)[0] == EXIT_UNKNOWN
    assert run([*args, "--k", "5"], tmp_path)[0] == EXIT_OK
    assert main([*args]) == EXIT_USAGE


def test_missing_property_file(fixtures_dir, tmp_path):
    code = main(["check", "--spec", str(fixtures_dir / "depth3.spec.json"), "--property", str(tmp_path / "nope")])
    assert code == EXIT_USAGE


def test_malformed_spec(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"window": 2,')
    assert main(["check", "--spec", str(bad), "--property", str(bad)]) == EXIT_USAGE
    assert "line" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [[], ["check"], ["solve"], ["check", "--method", "x"], ["frobnicate"]])
def test_usage_errors_exit_3(argv):
    with pytest.raises(SystemExit) as e:
        main(argv)
    assert e.value.code == EXIT_USAGE


def test_solve_sat_and_unsat(fixtures_dir, tmp_path):
    code, rep = run(["solve", str(fixtures_dir / "toy.query.json")], tmp_path)
    assert code == EXIT_VIOLATED and rep["status"] == "SAT" and len(rep["witness"]) == 1
    code, rep = run(["solve", str(fixtures_dir / "toy-unsat.query.json")], tmp_path)
    assert code == EXIT_OK and rep["status"] == "UNSAT"


def test_solve_with_abstraction_tags(fixtures_dir, tmp_path):
    code, rep = run(["solve", str(fixtures_dir / "zero-weight.query.json"), "--abstract-fields", "older-than:1"],
                    tmp_path)
    assert code == EXIT_OK and rep["provenance"] == "proved-via-abstraction"
    code, rep = run(["solve", str(fixtures_dir / "spurious.query.json"), "--abstract-fields", "0:x"], tmp_path)
    assert code == EXIT_OK and rep["provenance"] == "abstraction-refuted-spurious"


def test_abstraction_needs_spec(fixtures_dir):
    assert main(["solve", str(fixtures_dir / "toy.query.json"), "--abstract-fields", "older-than:1"]) == EXIT_USAGE


def test_output_invariant(fixtures_dir, tmp_path):
    code, rep = run(["invariant", "--config", str(fixtures_dir / "identity-output.inv.json")], tmp_path)
    assert code == EXIT_OK
    assert -0.11 <= rep["proved_bound"] <= -0.10
    assert rep["query_log"][0] == [0.0, "SAT"]


def test_input_invariant(fixtures_dir, tmp_path):
    code, rep = run(["invariant", "--config", str(fixtures_dir / "two-minus-x-input.inv.json"), "--pkt", "8"],
                    tmp_path)
    assert code == EXIT_OK and rep["proved_bound"] == 2.75


@pytest.mark.parametrize("flag", [["--eta", "0"], ["--eta", "-1"], ["--epsilon", "-0.5"]])
def test_invalid_invariant_parameters(fixtures_dir, flag):
    assert main(["invariant", "--config", str(fixtures_dir / "identity-output.inv.json"), *flag]) == EXIT_USAGE


def test_invalid_pkt(fixtures_dir):
    assert main(["invariant", "--config", str(fixtures_dir / "two-minus-x-input.inv.json"), "--pkt", "1"]) == EXIT_USAGE


def test_oracle_subcommands(fixtures_dir, tmp_path):
    code, rep = run(["oracle", "reach", "--spec", str(fixtures_dir / "depth3.spec.json"),
                     "--property", str(fixtures_dir / "depth3.prop.json")], tmp_path)
    assert code == EXIT_VIOLATED and rep["depth"] == 3
    code, rep = run(["oracle", "grid", str(fixtures_dir / "toy.query.json"), "--pitch", "0.5"], tmp_path)
    assert code == EXIT_VIOLATED and rep["found"]
    code, rep = run(["oracle", "trace", "--spec", str(fixtures_dir / "stall.spec.json"), "--length", "4",
                     "--seed", "3"], tmp_path)
    assert code == EXIT_OK and len(rep["states"]) == 4


def test_human_report_has_timing(fixtures_dir, capsys):
    main(["solve", str(fixtures_dir / "toy.query.json")])
    assert "time:" in capsys.readouterr().out


def test_log_env_var(fixtures_dir, monkeypatch, capsys):
    monkeypatch.setenv("DRLCHECK_LOG", "debug")
    assert main(["solve", str(fixtures_dir / "toy-unsat.query.json"), "--threads", "1"]) == EXIT_OK


def test_module_entry_point(fixtures_dir):
    p = subprocess.run([sys.executable, "-m", "drlcheck", "solve", str(fixtures_dir / "toy-unsat.query.json")],
                       capture_output=True, text=True)
    assert p.returncode == EXIT_OK and "UNSAT" in p.stdout
