import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest
import yaml
from filelock import FileLock

from skillroute import __version__
from skillroute.cli import main
from skillroute.router import ExpertAssignment, write_assignments

MODELS = {"m1": "A", "m2": "B", "m3": "C", "m4": "D"}


def write_jsonl(path, rows):
    path.write_text("".join(json.dumps(r) + "\n" for r in rows))


def question(qid, gold=None):
    row = {"question_id": qid, "question": f"[{qid}] Pick one.", "kind": "multiple_choice",
           "choices": ["w", "x", "y", "z"]}
    if gold is not None:
        row["gold_answer"] = gold
    return row


@pytest.fixture
def project(tmp_path):
    rules = [{"model": "kw", "contains": "Question:", "response": "Keywords: Logic, Puzzles"}]
    for m, label in MODELS.items():
        rules += [
            {"model": m, "contains": "[tdead]", "response": {"error": "backend down"}},
            {"model": m, "contains": "You have been provided", "response": f"{m} merges. The answer is (A)."},
            {"model": m, "contains": "You are one of several", "response": f"{m} revisits. The answer is ({label})."},
            {"model": m, "contains": "Question:", "response": f"{m} reasons. The answer is ({label})."},
        ]
    (tmp_path / "script.json").write_text(json.dumps({"mode": "exact", "rules": rules}))
    config = {
        "models": [{"model_id": m, "endpoint": "mock:script.json", "retry_limit": 1} for m in MODELS],
        "keyword_model": {"model_id": "kw", "endpoint": "mock:script.json"},
        "routing": {"k": 3, "temperature": 0.5, "trim_frac": 0.05, "seed": 0},
    }
    (tmp_path / "config.yaml").write_text(yaml.safe_dump(config))
    write_jsonl(tmp_path / "val.jsonl", [question(f"v{i}", "AB"[i % 2]) for i in range(8)])
    write_jsonl(tmp_path / "test.jsonl", [question(f"t{i}") for i in range(6)])
    return tmp_path


def run_cli(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def profile(capsys, p, out="run"):
    return run_cli(capsys, "profile", "--config", p / "config.yaml", "--validation", p / "val.jsonl", "--out", p / out)


def run(capsys, p, *flags, out="run", test="test.jsonl"):
    return run_cli(capsys, "run", "--config", p / "config.yaml", "--test", p / test, "--out", p / out, *flags)


def test_profile_happy_path_and_rerun(project, capsys):
    code, out, _ = profile(capsys, project)
    assert code == 0
    summary = json.loads(out)
    assert summary["backend_calls"] > 0 and summary["aggregator"] in MODELS
    for sub in ("profiles", "assignments", "transcripts", "answers", "stats"):
        assert (project / "run" / sub).is_dir()
    assert json.loads((project / "run" / "profiles" / "profiles.json").read_text())[0]["model_id"] == "m1"
    code, out, _ = profile(capsys, project)
    assert code == 0 and json.loads(out)["backend_calls"] == 0


def test_profile_missing_validation(project, capsys):
    code, _, err = run_cli(capsys, "profile", "--config", project / "config.yaml",
                           "--validation", project / "nope.jsonl", "--out", project / "run")
    assert code == 2 and "nope.jsonl" in err


def test_run_end_to_end(project, capsys):
    assert profile(capsys, project)[0] == 0
    code, out, _ = run(capsys, project)
    assert code == 0
    assert json.loads(out)["queries"] == 6
    answers = [json.loads(x) for x in (project / "run" / "answers" / "answers.jsonl").read_text().splitlines()]
    assert [a["final_answer"] for a in answers] == ["A"] * 6
    assert all(len(a["experts"]) == 3 for a in answers)
    for name in ("expert_histogram.csv", "agreement.json", "tokens.json", "load_cost.json", "load_cost.csv"):
        assert (project / "run" / "stats" / name).exists()
    code, out, _ = run(capsys, project)
    assert code == 0 and json.loads(out)["backend_calls"] == 0 and json.loads(out)["resumed"]


def test_run_seed_deterministic(project, capsys):
    for out in ("a", "b"):
        assert profile(capsys, project, out=out)[0] == 0
        assert run(capsys, project, "--seed", 1, out=out)[0] == 0
    for sub in ("answers/answers.jsonl", "transcripts/transcripts.jsonl", "assignments/post_trim.jsonl",
                "stats/tokens.json", "stats/expert_histogram.csv"):
        assert (project / "a" / sub).read_bytes() == (project / "b" / sub).read_bytes()


def test_run_without_profile(project, capsys):
    code, _, err = run(capsys, project)
    assert code == 3 and "profile" in err


def test_run_k_exceeds_pool(project, capsys):
    code, _, err = run(capsys, project, "--k", 5)
    assert code == 4 and "k exceeds pool" in err


def test_run_discuss_revision_field(project, capsys):
    profile(capsys, project)
    assert run(capsys, project, "--discuss", 1)[0] == 0
    rows = [json.loads(x) for x in (project / "run" / "transcripts" / "transcripts.jsonl").read_text().splitlines()]
    assert rows and all("revision" in r and r["revision"]["cot_text"] for r in rows)


def test_run_backend_exhaustion(project, capsys):
    profile(capsys, project)
    write_jsonl(project / "dead.jsonl", [question("tdead")])
    code, _, err = run(capsys, project, test="dead.jsonl")
    assert code == 5 and "tdead" in err


def test_run_malformed_test_file(project, capsys):
    profile(capsys, project)
    (project / "bad.jsonl").write_text('{"question_id": "x", "question": "Q", "kind": "essay"}\n')
    assert run(capsys, project, test="bad.jsonl")[0] == 2


def test_dump_config(project, capsys):
    code, out, _ = run(capsys, project, "--k", 2, "--temp", 0.25, "--dump-config")
    cfg = json.loads(out)
    assert code == 0 and cfg["routing"]["k"] == 2 and cfg["routing"]["temperature"] == 0.25
    assert [m["model_id"] for m in cfg["models"]] == list(MODELS)


def test_invalid_config(project, capsys):
    (project / "config.yaml").write_text("models: [\n")
    assert profile(capsys, project)[0] == 4
    (project / "config.yaml").write_text(yaml.safe_dump({"models": [], "keyword_model": {"model_id": "k",
                                                                                        "endpoint": "mock:x"}}))
    assert profile(capsys, project)[0] == 4
    (project / "config.yaml").write_text(yaml.safe_dump({"modles": []}))
    code, _, err = profile(capsys, project)
    assert code == 4 and "modles" in err


def test_lock_held(project, capsys):
    (project / "run").mkdir()
    with FileLock(str(project / "run" / ".skillroute.lock")):
        code, _, err = profile(capsys, project)
    assert code == 4 and "lock" in err


def test_simulate(tmp_path, capsys):
    rng = np.random.default_rng(0)
    ids = [f"e{i}" for i in range(16)]
    rows = [ExpertAssignment(f"q{i}", tuple(rng.choice(ids, 3, replace=False).tolist())) for i in range(100)]
    write_assignments(tmp_path / "a.jsonl", rows)
    code, out, _ = run_cli(capsys, "simulate", "--assignments", tmp_path / "a.jsonl")
    one = json.loads(out)
    assert code == 0 and one["naive_sequential_loads"] > one["batched_loads"]
    code, out, _ = run_cli(capsys, "simulate", "--assignments", tmp_path / "a.jsonl", "--workers", 4,
                           "--out", tmp_path / "sim")
    four = json.loads(out)
    assert four["max_makespan"] <= one["max_makespan"]
    assert (tmp_path / "sim" / "plan.json").exists() and (tmp_path / "sim" / "load_cost.csv").exists()

    write_assignments(tmp_path / "single.jsonl", [ExpertAssignment(f"q{i}", ("e0",)) for i in range(5)])
    code, out, _ = run_cli(capsys, "simulate", "--assignments", tmp_path / "single.jsonl")
    assert json.loads(out)["batched_loads"] == 1


def test_simulate_errors(tmp_path, capsys):
    (tmp_path / "bad.jsonl").write_text('{"query_id": 1}\n')
    assert run_cli(capsys, "simulate", "--assignments", tmp_path / "bad.jsonl")[0] == 2
    assert run_cli(capsys, "simulate", "--assignments", tmp_path / "missing.jsonl")[0] == 2
    write_assignments(tmp_path / "a.jsonl", [ExpertAssignment("q", ("e",))])
    assert run_cli(capsys, "simulate", "--assignments", tmp_path / "a.jsonl", "--workers", 0)[0] == 4
    assert run_cli(capsys, "simulate", "--assignments", tmp_path / "a.jsonl", "--load-cost", -1)[0] == 4


def test_version_subprocess():
    out = subprocess.run([sys.executable, "-m", "skillroute", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and __version__ in out.stdout
