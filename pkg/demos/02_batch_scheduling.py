"""
Batching routed queries per expert
==================================

Answering query by query reloads a model every time the expert changes.
Grouping each expert's queries into one batch loads every expert once.
This script compares both layouts in abstract cost units and splits the
batches over several workers.
"""

import numpy as np

from skillroute.router import ExpertAssignment, sample_experts, softmax, trim_and_resample
from skillroute.scheduler import CostModel, estimate_costs, make_plan

rng = np.random.default_rng(0)
experts = [f"e{i:02d}" for i in range(16)]

# 100 queries, 3 experts each, drawn from per-query distributions with a shared bias
bias = rng.normal(0, 1.0, len(experts))
assignments = []
for q in range(100):
    p = softmax(bias + rng.normal(0, 0.5, len(experts)), 0.5)
    assignments.append(ExpertAssignment(f"q{q}", sample_experts(experts, p, 3, rng), dict(zip(experts, p))))

# experts picked for fewer than 5% of the 300 selections are dropped and their slots redrawn
trimmed = trim_and_resample(assignments, 0.05, rng)
print("active experts before/after trimming:",
      len({e for a in assignments for e in a.experts}), len({e for a in trimmed for e in a.experts}))

cost = CostModel(load_cost=10, per_call_cost=1)
for workers in (1, 2, 4):
    plan = make_plan(trimmed, workers, cost)
    report = estimate_costs(plan, trimmed, cost)
    print(f"workers={workers}: loads batched {report.batched_loads} vs naive {report.naive_sequential_loads}, "
          f"max makespan {report.max_makespan:.0f} (naive single worker {report.naive_sequential_cost:.0f})")

# the worker split: longest batch first onto the least busy worker
plan = make_plan(trimmed, 4, cost)
for w, models in plan.worker_partition.items():
    print(w, [(m, len(plan.batches[m])) for m in models])
