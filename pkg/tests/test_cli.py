"""The batch front door: eval, fan, check; determinism and exit codes."""

import json
import pathlib
import subprocess
import sys

import pytest

from kvar.cli import RunConfig, build_parser, config_from_args, run

FIXTURES = pathlib.Path(__file__).parent / "fixtures"


def run_cli(*argv):
    args = build_parser().parse_args(list(argv))
    config = config_from_args(args)
    return run(config)


def test_eval_p2_minus_pt():
    report = run_cli("eval", "P2 - pt", "--measure", "euler")
    assert report.ok()
    by_id = {r.id: r for r in report.records}
    assert by_id["class"].lhs == "L + L^2"
    assert by_id["euler"].lhs.as_int() == 2


def test_eval_empty_all_measures_zero():
    report = run_cli("eval", "empty", "--measure", "euler", "--measure", "e",
                     "--measure", "poincare", "--measure", "count:3")
    assert report.ok()
    for r in report.records:
        if r.kind == "measure":
            assert r.lhs.as_int() == 0


def test_eval_blowup_with_e_poly():
    report = run_cli("eval", "Bl(P2;pt)", "--measure", "e")
    by_id = {r.id: r for r in report.records}
    assert str(by_id["e_poly"].lhs) == "1 + 2*(uv) + (uv)^2"
    assert by_id["weights"].kind == "weight_table"


def test_eval_parse_error_is_reported_not_raised():
    report = run_cli("eval", "P2 + noSuch")
    assert not report.ok()
    assert "unknown generator" in report.records[0].note


def test_fan_command(tmp_path):
    path = tmp_path / "fan.json"
    path.write_text(json.dumps({"rank": 2, "rays": [[1, 0], [0, 1]],
                                "maximal_cones": [[0, 1]]}))
    report = run_cli("fan", str(path), "--props", "--class", "--complete")
    assert report.ok()
    by_id = {r.id: r for r in report.records}
    assert by_id["props"].lhs == {"complete": False, "smooth": True, "dimension": 2}
    assert by_id["class"].lhs == "L^2"
    completed = by_id["complete"].lhs
    assert sorted(completed["rays"]) == [[-1, -1], [0, 1], [1, 0]]


def test_check_suite_perturbed_fixture():
    report = run_cli("check", "--suite", str(FIXTURES / "perturbed_suite.json"))
    assert not report.ok()
    failing = {r.kind for r in report.records if r.status == "fail"}
    passing = {r.kind for r in report.records if r.status == "pass"}
    assert failing == {"independence", "blowup_descent"}
    assert {"additivity", "mayer_vietoris", "kunneth"} <= passing


def test_check_empty_suite(tmp_path):
    path = tmp_path / "suite.json"
    path.write_text('{"checks": []}')
    report = run_cli("check", "--suite", str(path))
    assert report.ok()
    assert report.records == []
    assert report.counts == {"pass": 0, "fail": 0, "skipped": 0}


def test_check_corpus_small():
    report = run_cli("check", "--corpus-seed", "3", "--corpus-size", "4",
                     "--measure", "euler")
    assert report.ok()
    kinds = {r.kind for r in report.records}
    assert {"additivity", "independence", "square_relation", "blowup_descent",
            "mayer_vietoris", "kunneth", "c_complete", "dim_compatible",
            "square_valid", "purity", "point_count_oracle",
            "cover_monotone"} <= kinds


def test_exit_code_contract(tmp_path):
    env_cmd = [sys.executable, "-m", "kvar.cli", "check",
               "--suite", str(FIXTURES / "perturbed_suite.json")]
    proc = subprocess.run(env_cmd, capture_output=True, text=True)
    assert proc.returncode == 1
    ok_cmd = [sys.executable, "-m", "kvar.cli", "eval", "P1"]
    assert subprocess.run(ok_cmd, capture_output=True).returncode == 0


def test_json_reports_byte_identical(tmp_path):
    out_a, out_b = tmp_path / "a.json", tmp_path / "b.json"
    for out, seed_env in ((out_a, "0"), (out_b, "123")):
        subprocess.run(
            [sys.executable, "-m", "kvar.cli", "check", "--corpus-seed", "2",
             "--corpus-size", "4", "--format", "json", "--out", str(out)],
            check=True, env={"PYTHONHASHSEED": seed_env, "PATH": "/usr/bin:/bin"})
    assert out_a.read_bytes() == out_b.read_bytes()
    payload = json.loads(out_a.read_text())
    assert payload["summary"]["fail"] == 0
    assert all(r["timing"] is None for r in payload["records"])


def test_run_config_requires_corpus_or_suite():
    with pytest.raises(SystemExit):
        run(RunConfig(command="check"))
