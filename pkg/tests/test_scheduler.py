import csv
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from skillroute.errors import ConfigError
from skillroute.router import ExpertAssignment
from skillroute.scheduler import (
    BatchPlan,
    CostModel,
    build_batch_plan,
    estimate_costs,
    make_plan,
    naive_switch_count,
    partition_workers,
    write_report,
)


def A(qid, *experts):
    return ExpertAssignment(qid, tuple(experts))


def batches_of_sizes(sizes):
    return {f"m{i}": [f"q{j}" for j in range(s)] for i, s in enumerate(sizes)}


def test_build_batch_plan_grouping():
    assert build_batch_plan([A("q1", "A", "B"), A("q2", "B", "C")]) == {"A": ["q1"], "B": ["q1", "q2"], "C": ["q2"]}
    same = [A(f"q{i}", "x", "y") for i in range(4)]
    assert build_batch_plan(same) == {"x": ["q0", "q1", "q2", "q3"], "y": ["q0", "q1", "q2", "q3"]}


def test_hand_traced_costs():
    a = [A("q1", "A", "B"), A("q2", "B", "C")]
    rep = estimate_costs(make_plan(a), a)
    assert (rep.batched_loads, rep.naive_sequential_loads, rep.total_calls) == (3, 3, 4)
    single = [A(f"q{i}", "A") for i in range(5)]
    rep = estimate_costs(make_plan(single), single)
    assert rep.batched_loads == rep.naive_sequential_loads == 1


def test_naive_switch_count_interleaved():
    a = [A("q1", "A", "B"), A("q2", "A", "B"), A("q3", "A", "B")]
    assert naive_switch_count(a) == 6
    assert estimate_costs(make_plan(a), a).batched_loads == 2


def test_two_worker_partition_sizes_8_8_4():
    # costs 18, 18, 14: the third batch goes to the lower-index worker on the tie
    batches = batches_of_sizes([8, 8, 4])
    plan = BatchPlan(batches, partition_workers(batches, 2, CostModel(10, 1)))
    rep = estimate_costs(plan, [], CostModel(10, 1))
    assert plan.worker_partition == {0: ["m0", "m2"], 1: ["m1"]}
    assert sorted(rep.per_worker_makespan.values()) == [18.0, 32.0]


def test_lpt_examples():
    cm = CostModel(0, 1)
    assert partition_workers(batches_of_sizes([3, 2, 1]), 1, cm) == {0: ["m0", "m1", "m2"]}
    assert partition_workers(batches_of_sizes([10, 10]), 2, cm) == {0: ["m0"], 1: ["m1"]}
    part = partition_workers(batches_of_sizes([9, 7, 6, 5]), 2, cm)
    assert part == {0: ["m0", "m3"], 1: ["m1", "m2"]}
    plan = BatchPlan(batches_of_sizes([9, 7, 6, 5]), part)
    assert estimate_costs(plan, [], cm).per_worker_makespan == {0: 14.0, 1: 13.0}


def test_worker_order_is_descending_size():
    part = partition_workers(batches_of_sizes([1, 5, 3]), 1)
    assert part == {0: ["m1", "m2", "m0"]}


def test_config_errors():
    with pytest.raises(ConfigError):
        partition_workers({"a": ["q"]}, 0)
    with pytest.raises(ConfigError):
        CostModel(-1, 1)


def test_report_files(tmp_path):
    a = [A("q1", "A", "B"), A("q2", "B", "C")]
    rep = estimate_costs(make_plan(a, 2), a)
    write_report(rep, tmp_path / "r.json", tmp_path / "r.csv")
    data = json.loads((tmp_path / "r.json").read_text())
    assert data["batched_loads"] == 3 and data["max_makespan"] == rep.max_makespan
    rows = list(csv.DictReader((tmp_path / "r.csv").open()))
    assert [r["layout"] for r in rows] == ["naive_sequential", "batched", "batched_partitioned", "dedicated"]
    assert rows[0]["loads"] == "3"


_assignments = st.lists(
    st.lists(st.sampled_from([f"e{i}" for i in range(8)]), min_size=1, max_size=3, unique=True),
    min_size=1, max_size=40,
).map(lambda rows: [ExpertAssignment(f"q{i}", tuple(r)) for i, r in enumerate(rows)])


@settings(max_examples=100, deadline=None)
@given(_assignments, st.integers(1, 6), st.floats(0, 50), st.floats(0, 5))
def test_plan_invariants(assignments, workers, load_cost, per_call):
    cm = CostModel(load_cost, per_call)
    plan = make_plan(assignments, workers, cm)
    expected = sorted((e, a.query_id) for a in assignments for e in a.experts)
    assert sorted(plan.pairs()) == expected
    flat = [m for ms in plan.worker_partition.values() for m in ms]
    assert sorted(flat) == sorted(plan.batches) and len(flat) == len(set(flat))
    rep = estimate_costs(plan, assignments, cm)
    assert rep.batched_loads <= rep.naive_sequential_loads
    single = estimate_costs(make_plan(assignments, 1, cm), assignments, cm)
    assert rep.max_makespan <= single.max_makespan + 1e-9
    assert rep.max_makespan >= max(cm.batch_cost(len(q)) for q in plan.batches.values()) - 1e-9
    assert rep == estimate_costs(make_plan(assignments, workers, cm), assignments, cm)


def test_randomized_100_by_3_counts():
    rng = np.random.default_rng(0)
    ids = [f"e{i}" for i in range(16)]
    a = [ExpertAssignment(f"q{i}", tuple(rng.choice(ids, 3, replace=False).tolist())) for i in range(100)]
    plan = make_plan(a, 4)
    assert sum(len(q) for q in plan.batches.values()) == 300
    assert len(plan.batches) <= 16
