"""End-to-end orchestration.

``preprocess`` turns a labeled validation set into model profiles and a
task aggregator.  ``infer`` routes test queries to experts, runs the experts
batch by batch, optionally lets them revise after seeing each other's
answers, and aggregates.  Both persist their artifacts under an output
directory with a resumable manifest.
"""
from __future__ import annotations

import csv
import json
import logging
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Sequence
from urllib.parse import quote

import numpy as np

from .backend import Backend, GenerationResult, cot_kind, extract_answer, make_backend, render_prompt
from .config import PipelineConfig
from .embed import Embedder, make_embedder
from .errors import BackendExhaustedError, InputError, MissingArtifactError
from .keywords import (
    AnnotationRun,
    SkillSet,
    annotate_questions,
    consolidate,
    keyword_prompts,
    read_skillsets,
    runs_from_results,
    write_skillsets,
)
from .manifest import RunManifest
from .profile import (
    AggregatorProfile,
    CotRecord,
    ModelProfile,
    ValidationRecord,
    benchmark_aggregator,
    build_aggregation_items,
    build_profile,
    evaluate_model,
    read_profiles,
    select_aggregator,
    write_profiles,
)
from .router import (
    ExpertAssignment,
    expert_counts,
    global_competency,
    read_assignments,
    route,
    trim_and_resample,
    trim_threshold,
    write_assignments,
)
from .scheduler import BatchPlan, LoadCostReport, estimate_costs, make_plan, write_report

log = logging.getLogger(__name__)

# independent RNG streams derived from one seed
_STREAM_ROUTE, _STREAM_TRIM, _STREAM_AGG_ITEMS = 0, 1, 2


@dataclass
class Backends:
    pool: dict[str, Backend]
    keyword: Backend

    @classmethod
    def from_config(cls, config: PipelineConfig) -> "Backends":
        return cls(
            pool={m.model_id: make_backend(m, config.base_dir) for m in config.model_pool},
            keyword=make_backend(config.keyword_model, config.base_dir),
        )

    def total_calls(self) -> int:
        backends = {id(b): b for b in (*self.pool.values(), self.keyword)}
        return sum(b.calls for b in backends.values())


# --------------------------------------------------------------------------
# preprocessing
# --------------------------------------------------------------------------

@dataclass
class PreprocessResult:
    profiles: list[ModelProfile]
    aggregator_id: str
    vocabulary: frozenset[str]
    skillsets: dict[str, SkillSet] = field(default_factory=dict)
    aggregator_reports: list[AggregatorProfile] = field(default_factory=list)
    cot_records: list[CotRecord] = field(default_factory=list)

    @classmethod
    def load(cls, out_dir) -> "PreprocessResult":
        out = Path(out_dir)
        try:
            profiles = read_profiles(out / "profiles" / "profiles.json")
            agg = json.loads((out / "profiles" / "aggregator.json").read_text("utf-8"))
        except FileNotFoundError as exc:
            raise MissingArtifactError(f"preprocessing artifact missing: {exc.filename}") from None
        return cls(
            profiles=profiles,
            aggregator_id=agg["selected"],
            vocabulary=frozenset(kw for p in profiles for kw in p.skill_scores),
            aggregator_reports=[AggregatorProfile.from_dict(r) for r in agg["reports"]],
        )


def _model_file(model_id: str) -> str:
    return quote(model_id, safe="") + ".jsonl"


def _write_jsonl(path: Path, rows) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")


def _read_jsonl(path: Path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def preprocess(validation: Sequence[ValidationRecord], config: PipelineConfig,
               backends: Optional[Backends] = None, out_dir=None) -> PreprocessResult:
    """Annotate skills, evaluate every pool model, build profiles and pick the
    aggregator.  With ``out_dir``, completed stages are reloaded instead of
    re-run."""
    if not validation:
        raise InputError("validation set is empty")
    backends = backends or Backends.from_config(config)
    manifest = RunManifest.open(out_dir, config.preprocess_hash()) if out_dir is not None else None
    pdir = Path(out_dir) / "profiles" if out_dir is not None else None

    def done(stage):
        return manifest is not None and manifest.is_done(stage)

    # skill keywords
    runs_path = "profiles/keyword_runs.jsonl"
    if done("keywords"):
        runs = [AnnotationRun.from_dict(d) for d in _read_jsonl(Path(out_dir) / runs_path)]
    else:
        runs = annotate_questions([(r.question_id, r.question) for r in validation],
                                  backends.keyword, config.keyword_repeats)
        if manifest:
            _write_jsonl(Path(out_dir) / runs_path, (r.to_dict() for r in runs))
            manifest.mark_done("keywords", [runs_path])
    skillsets = consolidate(runs, scope=config.keyword_scope)
    if pdir is not None:
        write_skillsets(pdir / "skillsets.jsonl", skillsets)

    # chain-of-thought evaluation, one resumable stage per model
    cot_records: list[CotRecord] = []
    for model_id in config.model_ids:
        rel = f"profiles/cot/{_model_file(model_id)}"
        if done(f"cot:{model_id}"):
            recs = [CotRecord.from_dict(d) for d in _read_jsonl(Path(out_dir) / rel)]
        else:
            recs = evaluate_model(backends.pool[model_id], validation)
            if manifest:
                (pdir / "cot").mkdir(exist_ok=True)
                _write_jsonl(Path(out_dir) / rel, (r.to_dict() for r in recs))
                manifest.mark_done(f"cot:{model_id}", [rel])
        cot_records.extend(recs)

    profiles = [build_profile(m, cot_records, skillsets) for m in config.model_ids]
    by_id = {p.model_id: p for p in profiles}
    if pdir is not None:
        write_profiles(pdir / "profiles.json", profiles)

    # aggregator selection
    reports: list[AggregatorProfile] = []
    if len(config.model_pool) == 1:
        selected = config.model_ids[0]
    else:
        rng = np.random.default_rng([config.profile_seed, _STREAM_AGG_ITEMS])
        items = build_aggregation_items(cot_records, validation, rng)
        if pdir is not None:
            _write_jsonl(pdir / "aggregation_items.jsonl", (it.to_dict() for it in items))
        for model_id in config.model_ids:
            rel = f"profiles/aggregator/{_model_file(model_id)}"
            if done(f"aggregator:{model_id}"):
                report = AggregatorProfile.from_dict(_read_jsonl(Path(out_dir) / rel)[0])
            else:
                report = benchmark_aggregator(backends.pool[model_id], items)
                if manifest:
                    (pdir / "aggregator").mkdir(exist_ok=True)
                    _write_jsonl(Path(out_dir) / rel, [report.to_dict()])
                    manifest.mark_done(f"aggregator:{model_id}", [rel])
            reports.append(report)
        selected = select_aggregator(reports, by_id)
    if pdir is not None:
        (pdir / "aggregator.json").write_text(json.dumps(
            {"selected": selected, "reports": [r.to_dict() for r in reports]}, indent=2) + "\n", "utf-8")
        manifest.mark_done("preprocess", ["profiles/profiles.json", "profiles/aggregator.json"])
    return PreprocessResult(
        profiles=profiles,
        aggregator_id=selected,
        vocabulary=frozenset(kw for p in profiles for kw in p.skill_scores),
        skillsets=skillsets,
        aggregator_reports=reports,
        cot_records=cot_records,
    )


# --------------------------------------------------------------------------
# inference
# --------------------------------------------------------------------------

@dataclass
class ExpertTranscript:
    query_id: str
    model_id: str
    cot_text: str
    extracted_answer: Optional[str]
    prompt_tokens: int = 0
    completion_tokens: int = 0
    error: Optional[str] = None
    revision: Optional[dict] = None  # set by a discussion round

    @property
    def final_text(self) -> str:
        return self.revision["cot_text"] if self.revision else self.cot_text

    @property
    def final_answer(self) -> Optional[str]:
        return self.revision["extracted_answer"] if self.revision else self.extracted_answer

    def to_dict(self, with_revision: bool = False) -> dict:
        d = {
            "query_id": self.query_id,
            "model_id": self.model_id,
            "cot_text": self.cot_text,
            "extracted_answer": self.extracted_answer,
            "prompt_tokens": self.prompt_tokens,
            "completion_tokens": self.completion_tokens,
            "error": self.error,
        }
        if with_revision:
            d["revision"] = self.revision
        return d


@dataclass
class FinalAnswerRecord:
    query_id: str
    experts: tuple[str, ...]
    aggregator_id: str
    final_text: str
    final_answer: Optional[str]
    fallback: bool = False
    prompt_tokens: int = 0
    completion_tokens: int = 0

    def to_dict(self) -> dict:
        return {
            "query_id": self.query_id,
            "experts": list(self.experts),
            "aggregator_id": self.aggregator_id,
            "final_text": self.final_text,
            "final_answer": self.final_answer,
            "fallback": self.fallback,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FinalAnswerRecord":
        return cls(d["query_id"], tuple(d["experts"]), d["aggregator_id"], d["final_text"],
                   d["final_answer"], d.get("fallback", False))


@dataclass(frozen=True)
class CallRecord:
    stage: str  # keyword | expert | discussion | aggregate
    query_id: str
    model_id: str
    prompt_tokens: int
    completion_tokens: int
    ok: bool

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class InferenceResult:
    records: list[FinalAnswerRecord]
    pre_trim: list[ExpertAssignment] = field(default_factory=list)
    post_trim: list[ExpertAssignment] = field(default_factory=list)
    transcripts: list[ExpertTranscript] = field(default_factory=list)
    skillsets: dict[str, SkillSet] = field(default_factory=dict)
    plan: Optional[BatchPlan] = None
    cost_report: Optional[LoadCostReport] = None
    calls: list[CallRecord] = field(default_factory=list)
    trim_threshold: int = 0
    resumed: bool = False

    @classmethod
    def load(cls, out_dir) -> "InferenceResult":
        out = Path(out_dir)
        return cls(
            records=[FinalAnswerRecord.from_dict(d) for d in _read_jsonl(out / "answers" / "answers.jsonl")],
            pre_trim=read_assignments(out / "assignments" / "pre_trim.jsonl"),
            post_trim=read_assignments(out / "assignments" / "post_trim.jsonl"),
            skillsets=read_skillsets(out / "assignments" / "skillsets.jsonl"),
            resumed=True,
        )


def majority_vote(answers: Sequence[Optional[str]]) -> Optional[str]:
    """Most common non-missing answer; ties go to the earliest expert."""
    counts = Counter(a for a in answers if a is not None)
    if not counts:
        return None
    best = max(counts.values())
    return next(a for a in answers if a is not None and counts[a] == best)


def _responses(transcripts: Sequence[ExpertTranscript]) -> list[str]:
    return [t.final_text for t in transcripts if t.final_text]


def aggregate(record: ValidationRecord, transcripts: Sequence[ExpertTranscript],
              aggregator: Backend) -> FinalAnswerRecord:
    """Synthesize expert outputs with one aggregator call.

    On aggregator failure, falls back to a majority vote over the experts'
    extracted answers.
    """
    return aggregate_many([record], [transcripts], aggregator)[0]


def aggregate_many(records: Sequence[ValidationRecord], transcripts: Sequence[Sequence[ExpertTranscript]],
                   aggregator: Backend) -> list[FinalAnswerRecord]:
    prompts = []
    for rec, ts in zip(records, transcripts):
        responses = _responses(ts)
        if not responses:
            raise BackendExhaustedError(f"{rec.question_id}: every expert generation failed")
        prompts.append(render_prompt("aggregate", {
            "question": rec.prompt_text, "responses": responses, "answer_kind": rec.kind}))
    out = []
    for rec, ts, res in zip(records, transcripts, aggregator.generate_many(prompts)):
        experts = tuple(t.model_id for t in ts)
        if res.ok:
            out.append(FinalAnswerRecord(rec.question_id, experts, aggregator.model_id, res.text,
                                         extract_answer(res.text, rec.kind), False,
                                         res.prompt_tokens, res.completion_tokens))
        else:
            log.warning("%s: aggregator failed (%s); using majority vote", rec.question_id, res.error)
            vote = majority_vote([t.final_answer for t in ts])
            out.append(FinalAnswerRecord(rec.question_id, experts, aggregator.model_id, "", vote, True))
    return out


def run_discussion_round(record: ValidationRecord, transcripts: Sequence[ExpertTranscript],
                         experts: Mapping[str, Backend]) -> list[ExpertTranscript]:
    """Each expert sees every initial response and may revise its own.

    A failed revision keeps the original transcript.
    """
    prompts = discussion_prompts(record, transcripts)
    revised = []
    for t, prompt in zip(transcripts, prompts):
        res = experts[t.model_id].generate(prompt)
        revised.append(_apply_revision(t, res, record.kind))
    return revised


def discussion_prompts(record: ValidationRecord, transcripts: Sequence[ExpertTranscript]) -> list[str]:
    prompt = render_prompt("discuss", {
        "question": record.prompt_text,
        "responses": [t.cot_text for t in transcripts if t.cot_text] or [""],
        "answer_kind": record.kind,
    })
    return [prompt] * len(transcripts)


def _apply_revision(t: ExpertTranscript, res: GenerationResult, kind: str) -> ExpertTranscript:
    if not res.ok or not res.text:
        return t
    return ExpertTranscript(t.query_id, t.model_id, t.cot_text, t.extracted_answer,
                            t.prompt_tokens, t.completion_tokens, t.error,
                            revision={"cot_text": res.text,
                                      "extracted_answer": extract_answer(res.text, kind),
                                      "prompt_tokens": res.prompt_tokens,
                                      "completion_tokens": res.completion_tokens})


def execute_plan(plan: BatchPlan, prompts: Mapping[tuple[str, str], str],
                 backends: Mapping[str, Backend], workers: int) -> dict[tuple[str, str], GenerationResult]:
    """Run each expert's batch on its assigned worker.

    A worker holds one expert at a time and runs its batches in order;
    workers run concurrently.  Results are keyed by ``(query_id, model_id)``.
    """
    def run_worker(models):
        out = {}
        for m in models:
            qids = plan.batches[m]
            results = backends[m].generate_many([prompts[(q, m)] for q in qids])
            out.update({(q, m): r for q, r in zip(qids, results)})
        return out

    results: dict[tuple[str, str], GenerationResult] = {}
    partitions = [plan.worker_partition[w] for w in sorted(plan.worker_partition)]
    with ThreadPoolExecutor(max_workers=max(1, min(workers, len(partitions)))) as pool:
        for part in pool.map(run_worker, partitions):
            results.update(part)
    return results


def infer(test: Sequence[ValidationRecord], pre: PreprocessResult, config: PipelineConfig,
          backends: Optional[Backends] = None, out_dir=None,
          embedder: Optional[Embedder] = None) -> InferenceResult:
    """Route, batch, execute, (optionally) discuss, aggregate, persist."""
    backends = backends or Backends.from_config(config)
    manifest = None
    run_hash = config.run_hash([r.to_dict() for r in test], pre.aggregator_id)
    if out_dir is not None:
        manifest = RunManifest.open(out_dir, config.preprocess_hash())
        if manifest.is_done("inference", run_hash):
            log.info("inference already complete in %s", out_dir)
            return InferenceResult.load(out_dir)
    if pre.aggregator_id not in backends.pool:
        raise InputError(f"aggregator {pre.aggregator_id!r} is not in the model pool")
    profile_ids = [p.model_id for p in pre.profiles]
    if set(profile_ids) != set(config.model_ids):
        raise InputError("profiles do not match the configured model pool")

    params = config.routing
    calls: list[CallRecord] = []
    if not test:
        result = InferenceResult(records=[])
        if out_dir is not None:
            _persist_inference(result, out_dir, config, with_revision=config.discussion_rounds > 0)
            manifest.mark_done("inference", _INFERENCE_ARTIFACTS, run_hash)
        return result

    # test-time skills: same annotation, consolidated within each question
    kw_prompts = keyword_prompts([(r.question_id, r.question) for r in test], config.keyword_repeats)
    kw_results = backends.keyword.generate_many(kw_prompts)
    qids = [r.question_id for r in test]
    skillsets = consolidate(runs_from_results(qids, kw_results, config.keyword_repeats), scope="question")
    for i, res in enumerate(kw_results):
        calls.append(CallRecord("keyword", qids[i // config.keyword_repeats], backends.keyword.model_id,
                                res.prompt_tokens, res.completion_tokens, res.ok))

    # recruiting
    embedder = embedder or make_embedder(config.embedding)
    profiles = sorted(pre.profiles, key=lambda p: config.model_ids.index(p.model_id))
    gamma = global_competency(profiles)
    vocabulary = pre.vocabulary or frozenset(kw for p in profiles for kw in p.skill_scores)
    pre_trim = []
    for i, rec in enumerate(test):
        rng = np.random.default_rng([params.seed, _STREAM_ROUTE, i])
        _, assignment = route(skillsets[rec.question_id], profiles, gamma, params, embedder, rng, vocabulary)
        pre_trim.append(assignment)
    post_trim = trim_and_resample(pre_trim, params.trim_frac,
                                  np.random.default_rng([params.seed, _STREAM_TRIM]), params.with_replacement)
    threshold = trim_threshold(sum(len(a.experts) for a in pre_trim), params.trim_frac)

    # batched expert execution
    plan = make_plan(post_trim, config.workers, config.cost_model)
    by_id = {r.question_id: r for r in test}
    prompts = {}
    for a in post_trim:
        rec = by_id[a.query_id]
        prompt = render_prompt(cot_kind(rec.kind), {"question": rec.prompt_text})
        for e in a.experts:
            prompts[(a.query_id, e)] = prompt
    results = execute_plan(plan, prompts, backends.pool, config.workers)
    transcripts: dict[str, list[ExpertTranscript]] = {}
    for a in post_trim:
        kind = by_id[a.query_id].kind
        ts = []
        for e in a.experts:
            res = results[(a.query_id, e)]
            ts.append(ExpertTranscript(a.query_id, e, res.text, extract_answer(res.text, kind) if res.ok else None,
                                       res.prompt_tokens, res.completion_tokens, res.error))
            calls.append(CallRecord("expert", a.query_id, e, res.prompt_tokens, res.completion_tokens, res.ok))
        transcripts[a.query_id] = ts

    if config.discussion_rounds == 1:
        disc_prompts = {}
        for a in post_trim:
            ps = discussion_prompts(by_id[a.query_id], transcripts[a.query_id])
            disc_prompts.update({(a.query_id, t.model_id): p for t, p in zip(transcripts[a.query_id], ps)})
        disc_results = execute_plan(plan, disc_prompts, backends.pool, config.workers)
        for a in post_trim:
            kind = by_id[a.query_id].kind
            revised = []
            for t in transcripts[a.query_id]:
                res = disc_results[(a.query_id, t.model_id)]
                calls.append(CallRecord("discussion", a.query_id, t.model_id,
                                        res.prompt_tokens, res.completion_tokens, res.ok))
                revised.append(_apply_revision(t, res, kind))
            transcripts[a.query_id] = revised

    aggregator = backends.pool[pre.aggregator_id]
    records = aggregate_many(test, [transcripts[r.question_id] for r in test], aggregator)
    for rec in records:
        calls.append(CallRecord("aggregate", rec.query_id, aggregator.model_id,
                                rec.prompt_tokens, rec.completion_tokens, not rec.fallback))

    result = InferenceResult(
        records=records,
        pre_trim=pre_trim,
        post_trim=post_trim,
        transcripts=[t for r in test for t in transcripts[r.question_id]],
        skillsets=skillsets,
        plan=plan,
        cost_report=estimate_costs(plan, post_trim, config.cost_model),
        calls=calls,
        trim_threshold=threshold,
    )
    if out_dir is not None:
        _persist_inference(result, out_dir, config, with_revision=config.discussion_rounds > 0)
        manifest.mark_done("inference", _INFERENCE_ARTIFACTS, run_hash)
    return result


_INFERENCE_ARTIFACTS = [
    "assignments/skillsets.jsonl",
    "assignments/pre_trim.jsonl",
    "assignments/post_trim.jsonl",
    "assignments/plan.json",
    "transcripts/transcripts.jsonl",
    "answers/answers.jsonl",
    "stats/expert_histogram.csv",
    "stats/agreement.json",
    "stats/tokens.json",
    "stats/load_cost.json",
    "stats/load_cost.csv",
]


def _persist_inference(result: InferenceResult, out_dir, config: PipelineConfig, with_revision: bool) -> None:
    out = Path(out_dir)
    write_skillsets(out / "assignments" / "skillsets.jsonl", result.skillsets)
    write_assignments(out / "assignments" / "pre_trim.jsonl", result.pre_trim)
    write_assignments(out / "assignments" / "post_trim.jsonl", result.post_trim)
    plan = result.plan.to_dict() if result.plan else {"batches": {}, "worker_partition": {}}
    (out / "assignments" / "plan.json").write_text(json.dumps(plan, indent=2) + "\n", "utf-8")
    _write_jsonl(out / "transcripts" / "transcripts.jsonl",
                 (t.to_dict(with_revision) for t in result.transcripts))
    _write_jsonl(out / "answers" / "answers.jsonl", (r.to_dict() for r in result.records))
    emit_stats(result, config.model_ids, out / "stats")


# --------------------------------------------------------------------------
# statistics
# --------------------------------------------------------------------------

def expert_histogram(pre_trim: Sequence[ExpertAssignment], post_trim: Sequence[ExpertAssignment],
                     model_ids: Sequence[str]) -> list[dict]:
    pre, post = expert_counts(pre_trim), expert_counts(post_trim)
    ids = list(dict.fromkeys([*model_ids, *pre, *post]))
    return [{"model_id": m, "pre_trim": pre[m], "post_trim": post[m]} for m in ids]


def agreement_rates(result: InferenceResult) -> dict[str, dict]:
    """Per expert: how often its (final) answer equals the aggregated answer."""
    final = {r.query_id: r.final_answer for r in result.records}
    stats: dict[str, dict] = {}
    for t in result.transcripts:
        s = stats.setdefault(t.model_id, {"answers": 0, "agree": 0})
        s["answers"] += 1
        s["agree"] += int(t.final_answer is not None and t.final_answer == final.get(t.query_id))
    for s in stats.values():
        s["rate"] = s["agree"] / s["answers"] if s["answers"] else 0.0
    return {m: stats[m] for m in sorted(stats)}


def token_counts(calls: Sequence[CallRecord]) -> dict:
    stages: dict[str, dict] = {}
    per_query: dict[str, int] = {}
    for c in calls:
        s = stages.setdefault(c.stage, {"calls": 0, "prompt_tokens": 0, "completion_tokens": 0})
        s["calls"] += 1
        s["prompt_tokens"] += c.prompt_tokens
        s["completion_tokens"] += c.completion_tokens
        if c.stage != "keyword":
            per_query[c.query_id] = per_query.get(c.query_id, 0) + 1
    total = {key: sum(s[key] for s in stages.values()) for key in ("calls", "prompt_tokens", "completion_tokens")}
    return {"stages": stages, "total": total, "model_calls_per_query": per_query}


def emit_stats(result: InferenceResult, model_ids: Sequence[str], stats_dir) -> dict:
    """Write histogram, agreement, token and load-cost reports; return them."""
    stats_dir = Path(stats_dir)
    stats_dir.mkdir(parents=True, exist_ok=True)
    hist = expert_histogram(result.pre_trim, result.post_trim, model_ids)
    with open(stats_dir / "expert_histogram.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=["model_id", "pre_trim", "post_trim"], lineterminator="\n")
        writer.writeheader()
        writer.writerows(hist)
    agreement = agreement_rates(result)
    tokens = token_counts(result.calls)
    tokens["trim_threshold"] = result.trim_threshold
    (stats_dir / "agreement.json").write_text(json.dumps(agreement, indent=2) + "\n", "utf-8")
    (stats_dir / "tokens.json").write_text(json.dumps(tokens, indent=2) + "\n", "utf-8")
    report = result.cost_report
    if report is None:
        report = LoadCostReport(0, 0, 0, {}, 0.0, 0.0, 0, 0.0)
    write_report(report, stats_dir / "load_cost.json", stats_dir / "load_cost.csv")
    return {"histogram": hist, "agreement": agreement, "tokens": tokens, "load_cost": report.to_dict()}


__all__ = [
    "Backends", "PreprocessResult", "ExpertTranscript", "FinalAnswerRecord", "InferenceResult",
    "preprocess", "infer", "aggregate", "aggregate_many", "run_discussion_round", "execute_plan",
    "emit_stats", "majority_vote",
]
