"""Per-expert batching of routed queries and a modeled load-cost report.

Grouping every query an expert must answer into one batch means each expert
is loaded once, instead of once per switch in instance-major order.
"""
from __future__ import annotations

import csv
import heapq
import json
from dataclasses import asdict, dataclass
from typing import Mapping, Sequence

from .errors import ConfigError
from .router import ExpertAssignment


@dataclass(frozen=True)
class CostModel:
    """Abstract cost units: one expert load, one generation call."""

    load_cost: float = 10.0
    per_call_cost: float = 1.0

    def __post_init__(self):
        if self.load_cost < 0 or self.per_call_cost < 0:
            raise ConfigError("cost model values must be >= 0")

    def batch_cost(self, size: int) -> float:
        return self.load_cost + size * self.per_call_cost


@dataclass
class BatchPlan:
    batches: dict[str, list[str]]
    worker_partition: dict[int, list[str]]

    def pairs(self) -> list[tuple[str, str]]:
        return [(m, q) for m, qs in self.batches.items() for q in qs]

    def to_dict(self) -> dict:
        return {
            "batches": self.batches,
            "worker_partition": {str(w): ms for w, ms in self.worker_partition.items()},
        }


@dataclass(frozen=True)
class LoadCostReport:
    batched_loads: int
    naive_sequential_loads: int
    total_calls: int
    per_worker_makespan: dict[int, float]
    batched_cost: float            # all batches on one worker
    naive_sequential_cost: float   # instance-major order on one worker
    dedicated_workers: int         # one worker per active expert
    dedicated_makespan: float

    @property
    def max_makespan(self) -> float:
        return max(self.per_worker_makespan.values(), default=0.0)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["per_worker_makespan"] = {str(w): c for w, c in self.per_worker_makespan.items()}
        d["max_makespan"] = self.max_makespan
        return d


def build_batch_plan(assignments: Sequence[ExpertAssignment]) -> dict[str, list[str]]:
    """Expert -> query ids, in first-appearance order of experts and input
    order of queries."""
    batches: dict[str, list[str]] = {}
    for a in assignments:
        for e in a.experts:
            batches.setdefault(e, []).append(a.query_id)
    return batches


def partition_workers(batches: Mapping[str, Sequence[str]], workers: int,
                      cost_model: CostModel = CostModel()) -> dict[int, list[str]]:
    """Longest-processing-time greedy: largest batch first onto the least
    loaded worker (lowest index on ties).

    Each worker's list is in execution order: descending batch size, then
    model id.
    """
    if workers < 1:
        raise ConfigError("workers must be >= 1")
    order = sorted(batches, key=lambda m: (-cost_model.batch_cost(len(batches[m])), m))
    heap = [(0.0, w) for w in range(workers)]
    assigned: dict[int, list[str]] = {w: [] for w in range(workers)}
    for m in order:
        load, w = heapq.heappop(heap)
        assigned[w].append(m)
        heapq.heappush(heap, (load + cost_model.batch_cost(len(batches[m])), w))
    for w in assigned:
        assigned[w].sort(key=lambda m: (-len(batches[m]), m))
    return assigned


def make_plan(assignments: Sequence[ExpertAssignment], workers: int = 1,
              cost_model: CostModel = CostModel()) -> BatchPlan:
    batches = build_batch_plan(assignments)
    return BatchPlan(batches, partition_workers(batches, workers, cost_model))


def naive_switch_count(assignments: Sequence[ExpertAssignment]) -> int:
    """Loads needed when calls run instance by instance on one device: one
    per change of resident expert, the first load included."""
    loads = 0
    resident = None
    for a in assignments:
        for e in a.experts:
            if e != resident:
                loads += 1
                resident = e
    return loads


def estimate_costs(plan: BatchPlan, assignments: Sequence[ExpertAssignment],
                   cost_model: CostModel = CostModel()) -> LoadCostReport:
    sizes = {m: len(qs) for m, qs in plan.batches.items()}
    calls = sum(sizes.values())
    naive = naive_switch_count(assignments)
    makespan = {
        w: float(sum(cost_model.batch_cost(sizes[m]) for m in models))
        for w, models in plan.worker_partition.items()
    }
    return LoadCostReport(
        batched_loads=len(plan.batches),
        naive_sequential_loads=naive,
        total_calls=calls,
        per_worker_makespan=makespan,
        batched_cost=float(sum(cost_model.batch_cost(s) for s in sizes.values())),
        naive_sequential_cost=float(naive * cost_model.load_cost + calls * cost_model.per_call_cost),
        dedicated_workers=len(plan.batches),
        dedicated_makespan=float(max((cost_model.batch_cost(s) for s in sizes.values()), default=0.0)),
    )


def write_report(report: LoadCostReport, json_path=None, csv_path=None) -> None:
    if json_path is not None:
        with open(json_path, "w", encoding="utf-8") as fh:
            json.dump(report.to_dict(), fh, indent=2)
            fh.write("\n")
    if csv_path is not None:
        with open(csv_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["layout", "workers", "loads", "makespan"])
            writer.writerow(["naive_sequential", 1, report.naive_sequential_loads, report.naive_sequential_cost])
            writer.writerow(["batched", 1, report.batched_loads, report.batched_cost])
            writer.writerow(["batched_partitioned", len(report.per_worker_makespan),
                             report.batched_loads, report.max_makespan])
            writer.writerow(["dedicated", report.dedicated_workers, report.batched_loads,
                             report.dedicated_makespan])
