"""
A full run against mock backends
================================

Preprocess a validation set, then route, execute, aggregate and write every
artifact for a test set.  The same run is repeated with one discussion round
in which the experts see each other's answers before aggregation.
"""

import json
import tempfile
from pathlib import Path

from skillroute.pipeline import infer, preprocess
from skillroute.synthetic import make_world

val = make_world(40, seed=1, prefix="v")
test = make_world(30, seed=2, prefix="t")
# one world holds both sets so the mock models know every question
val.questions.extend(test.questions)
val.question_skills.update(test.question_skills)
val.__post_init__()

out = Path(tempfile.mkdtemp(prefix="skillroute-demo-"))
for rounds in (0, 1):
    run_dir = out / f"discuss{rounds}"
    config = val.config(k=3, seed=0, workers=2, discussion_rounds=rounds)
    backends = val.backends()
    pre = preprocess(val.questions[:40], config, backends, run_dir)
    result = infer(test.questions, pre, config, backends, run_dir)
    correct = sum(r.final_answer == val.gold(r.query_id) for r in result.records)
    tokens = json.loads((run_dir / "stats" / "tokens.json").read_text())
    calls = sorted(set(tokens["model_calls_per_query"].values()))
    print(f"discussion rounds {rounds}: {correct}/{len(result.records)} correct, "
          f"model calls per query {calls}, aggregator {pre.aggregator_id}")

print("artifacts under", out)
for p in sorted((out / "discuss0").rglob("*")):
    if p.is_file():
        print("  ", p.relative_to(out / "discuss0"))
