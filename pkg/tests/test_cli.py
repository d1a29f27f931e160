import json
import subprocess
import sys
from pathlib import Path

import pytest
import yaml

from evr.cli import ConfigError, check_vectors, main, parse_config

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"


def run_cli(*argv):
    return main([str(a) for a in argv])


def last_line(path):
    return json.loads(Path(path).read_text().splitlines()[-1])


def write_config(tmp_path, doc, name="cfg.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(doc))
    return path


def test_default_scenario(tmp_path):
    out = tmp_path / "trace.jsonl"
    assert run_cli("run", "--config", SCENARIOS / "default.yaml", "--out", out) == 0
    summary = last_line(out)
    assert summary["phase"] == "final" and summary["violations"] == []
    assert summary["outcome"]["u"] == [1, 1, 1]


def test_withhold_scenario_aborts_cleanly(tmp_path):
    out = tmp_path / "trace.jsonl"
    assert run_cli("run", "--config", SCENARIOS / "withhold.yaml", "--out", out) == 0
    summary = last_line(out)
    assert summary["phase"] == "abort" and summary["outcome"]["w"] == [0, 0, 0]
    assert summary["outcome"]["z"] == [1, 0, 0]


def test_inform_scenario(tmp_path):
    out = tmp_path / "trace.jsonl"
    assert run_cli("run", "--config", SCENARIOS / "inform.yaml", "--out", out) == 0
    assert last_line(out)["outcome"]["u"] == [6, 0, 0]


def test_multishot_scenario(tmp_path):
    out = tmp_path / "trace.jsonl"
    assert run_cli("run", "--config", SCENARIOS / "multishot.yaml", "--out", out) == 0
    summary = last_line(out)
    assert [r["round"] for r in summary["rounds"]] == [1]
    assert summary["phase"] == "abort" and summary["verRev"] == [True, False, None]


def test_trace_lines_are_json(tmp_path):
    out = tmp_path / "trace.jsonl"
    run_cli("run", "--config", SCENARIOS / "default.yaml", "--out", out)
    records = [json.loads(line) for line in out.read_text().splitlines()[:-1]]
    assert records and all({"seq", "time", "function", "effect", "balances_after"} <= set(r) for r in records)


@pytest.mark.parametrize("doc", [
    ["not", "a", "mapping"],
    {"endowments": {"a": [1, 1, 1]}, "colour": "blue"},
    {"endowments": {"a": [1, 1, 1], "e": [0]}},
    {"endowments": {"a": [1, 1, 1]}, "group_profile": "huge"},
    {"endowments": {"a": [1, 1, 1]}, "z_model": "Everything"},
    {"endowments": {"a": [1, 1, 1]}, "strategies": [{"stage2": "dance"}, {}, {}]},
    {"endowments": {"a": [1, 1, 1]}, "strategies": [{}]},
    {"endowments": {"a": [1, 1, 1]}, "escrow": {"gas": 5}},
    {"endowments": {"a": [1, 1]}},
])
def test_malformed_config_exits_2(tmp_path, doc):
    assert run_cli("run", "--config", write_config(tmp_path, doc)) == 2


def test_unparseable_or_missing_file(tmp_path):
    bad = tmp_path / "bad.yaml"
    bad.write_text("endowments: [unclosed")
    assert run_cli("run", "--config", bad) == 2
    assert run_cli("run", "--config", tmp_path / "missing.yaml") == 2


def test_illegal_strategy_in_config(tmp_path):
    doc = {"endowments": {"a": [1, 1, 1]}, "strategies": [{"stage2": "inform"}, {}, {}]}
    assert run_cli("run", "--config", write_config(tmp_path, doc)) == 2


def test_unsafe_endowments_need_flag(tmp_path):
    doc = {"endowments": {"a": [1, 1, 1], "e": [1, 0, 0]}}
    path = write_config(tmp_path, doc)
    assert run_cli("run", "--config", path) == 2
    assert run_cli("run", "--config", path, "--allow-unsafe", "--out", tmp_path / "t") == 0


def test_parse_config_defaults():
    cfg = parse_config({"endowments": {"a": [2, 2, 2]}})
    assert cfg.e == (0, 0, 0) and cfg.group_profile == "tiny" and cfg.rounds is None
    with pytest.raises(ConfigError):
        parse_config({"schedule": {"rounds": 0}})


def test_certify_reduced_space(tmp_path):
    doc = {"endowments": {"a": [1, 1, 1]},
           "search": {"toggles": {"routes": False, "actions": ["inform", "steal", "withhold"]}}}
    out = tmp_path / "report.json"
    assert run_cli("certify", "--config", write_config(tmp_path, doc), "--out", out) == 0
    report = json.loads(out.read_text())
    assert report["counterexamples"] == [] and report["checked"]["total"] > 0
    assert "family" in report and "wallclock" in report


def test_certify_budget_exceeded(tmp_path):
    doc = {"endowments": {"a": [1, 1, 1, 1, 1]}}
    assert run_cli("certify", "--config", write_config(tmp_path, doc)) == 3
    doc = {"endowments": {"a": [1, 1, 1]}, "search": {"budget": 10}}
    assert run_cli("certify", "--config", write_config(tmp_path, doc)) == 3


def test_certify_expect_counterexample_without_one_fails(tmp_path):
    doc = {"endowments": {"a": [1, 1, 1]},
           "search": {"expect_counterexample": True, "toggles": {"routes": False, "sends": False}}}
    assert run_cli("certify", "--config", write_config(tmp_path, doc), "--out", tmp_path / "r") == 1


def test_vectors_round_trip(tmp_path):
    out = tmp_path / "vec.json"
    assert run_cli("vectors", "--profile", "tiny", "--seed", "3", "--out", out) == 0
    vec = json.loads(out.read_text())
    assert check_vectors(vec) == []
    s = vec["sharing"]
    assert pow(vec["params"]["g"], s["x"], vec["params"]["p"]) == s["X"]
    vec["sharing"]["shares"][0][1] += 1
    assert check_vectors(vec) != []


def test_seed_range_checked():
    assert run_cli("vectors", "--seed", str(2**64)) == 2


@pytest.mark.parametrize("command", ["dkg-demo", "vrf-demo"])
def test_demos(tmp_path, command):
    out = tmp_path / "demo.json"
    assert run_cli(command, "--config", SCENARIOS / "default.yaml", "--out", out) == 0
    json.loads(out.read_text())


def test_lemmas_command(tmp_path):
    doc = {"endowments": {"a": [1, 1, 1]}, "search": {"z_models": ["StealSplit"]}}
    out = tmp_path / "lemmas.json"
    assert run_cli("lemmas", "--config", write_config(tmp_path, doc), "--out", out) == 0
    assert all(c["passed"] for c in json.loads(out.read_text()))


def test_seed_override_changes_key_but_not_payoffs(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    run_cli("run", "--config", SCENARIOS / "default.yaml", "--seed", "1", "--out", a)
    run_cli("run", "--config", SCENARIOS / "default.yaml", "--seed", "2", "--out", b)
    sa, sb = last_line(a), last_line(b)
    assert sa["outcome"] == sb["outcome"]
    assert sa["x"] != sb["x"] or a.read_text() != b.read_text()


def test_console_script_entry_point(tmp_path):
    out = tmp_path / "v.json"
    proc = subprocess.run([sys.executable, "-m", "evr.cli", "vectors", "--profile", "micro", "--out", str(out)],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert json.loads(out.read_text())["profile"] == "micro"
