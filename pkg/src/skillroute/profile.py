"""Model skill profiles and aggregator selection from a validation set."""
from __future__ import annotations

import json
import string
from collections import Counter, defaultdict
from fractions import Fraction
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .backend import (
    ANSWER_KINDS,
    MULTIPLE_CHOICE,
    Backend,
    answers_match,
    cot_kind,
    extract_answer,
    render_prompt,
)
from .errors import AggregationTaskEmpty, InputError
from .keywords import SkillSet


@dataclass(frozen=True)
class ValidationRecord:
    """One question.  ``gold_answer`` may be ``None`` for unlabeled test data."""

    question_id: str
    question: str
    kind: str
    choices: tuple[tuple[str, str], ...] = ()
    gold_answer: Optional[str] = None

    def __post_init__(self):
        if self.kind not in ANSWER_KINDS:
            raise InputError(f"{self.question_id}: unknown kind {self.kind!r}")
        if self.kind == MULTIPLE_CHOICE:
            if len(self.choices) < 2:
                raise InputError(f"{self.question_id}: multiple_choice needs >= 2 choices")
            labels = {label for label, _ in self.choices}
            if self.gold_answer is not None and self.gold_answer.strip().upper() not in labels:
                raise InputError(f"{self.question_id}: gold answer {self.gold_answer!r} is not a choice label")
        elif self.choices:
            raise InputError(f"{self.question_id}: numeric records take no choices")

    @property
    def prompt_text(self) -> str:
        """Question text with labeled options appended, as sent to models."""
        if not self.choices:
            return self.question
        options = "\n".join(f"({label}) {text}" for label, text in self.choices)
        return f"{self.question}\n{options}"

    @classmethod
    def from_dict(cls, data: dict) -> "ValidationRecord":
        try:
            choices = data.get("choices") or ()
            if isinstance(choices, dict):
                choices = tuple((str(k), str(v)) for k, v in choices.items())
            else:
                choices = tuple(
                    (c[0], c[1]) if isinstance(c, (list, tuple)) else (string.ascii_uppercase[i], str(c))
                    for i, c in enumerate(choices)
                )
            gold = data.get("gold_answer")
            return cls(
                question_id=str(data["question_id"]),
                question=data["question"],
                kind=data["kind"],
                choices=choices,
                gold_answer=None if gold is None else str(gold),
            )
        except KeyError as exc:
            raise InputError(f"record missing field {exc}") from None

    def to_dict(self) -> dict:
        d = {"question_id": self.question_id, "question": self.question, "kind": self.kind}
        if self.choices:
            d["choices"] = [list(c) for c in self.choices]
        d["gold_answer"] = self.gold_answer
        return d


def read_records(path) -> list[ValidationRecord]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                data = json.loads(line)
            except json.JSONDecodeError as exc:
                raise InputError(f"{path}:{n}: invalid JSON: {exc}") from None
            records.append(ValidationRecord.from_dict(data))
    ids = [r.question_id for r in records]
    if len(set(ids)) != len(ids):
        raise InputError(f"{path}: duplicate question_id")
    return records


@dataclass(frozen=True)
class CotRecord:
    question_id: str
    model_id: str
    cot_text: str
    extracted_answer: Optional[str]
    correct: bool

    def to_dict(self) -> dict:
        return dict(self.__dict__)

    @classmethod
    def from_dict(cls, data: dict) -> "CotRecord":
        return cls(**data)


def evaluate_model(model: Backend, records: Sequence[ValidationRecord]) -> list[CotRecord]:
    """Zero-shot CoT answers of ``model`` on every record, scored against gold."""
    if not records:
        raise InputError("no records to evaluate")
    prompts = [render_prompt(cot_kind(r.kind), {"question": r.prompt_text}) for r in records]
    out = []
    for rec, res in zip(records, model.generate_many(prompts)):
        answer = extract_answer(res.text, rec.kind) if res.ok else None
        out.append(CotRecord(rec.question_id, model.model_id, res.text, answer,
                             answers_match(answer, rec.gold_answer, rec.kind)))
    return out


@dataclass(frozen=True)
class ModelProfile:
    model_id: str
    skill_scores: Mapping[str, int]

    @property
    def total_score(self) -> int:
        return sum(self.skill_scores.values())

    def to_dict(self) -> dict:
        return {
            "model_id": self.model_id,
            "skill_scores": {k: self.skill_scores[k] for k in sorted(self.skill_scores)},
            "total_score": self.total_score,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ModelProfile":
        profile = cls(data["model_id"], dict(data["skill_scores"]))
        if "total_score" in data and data["total_score"] != profile.total_score:
            raise InputError(f"profile {profile.model_id}: total_score does not match skill_scores")
        return profile


def build_profile(model_id: str, cot_records: Iterable[CotRecord],
                  skillsets: Mapping[str, SkillSet]) -> ModelProfile:
    """+1 to every skill of a correctly answered question, -1 otherwise."""
    scores: Counter = Counter()
    touched = set()
    for rec in cot_records:
        if rec.model_id != model_id:
            continue
        try:
            skills = skillsets[rec.question_id].keywords
        except KeyError:
            raise InputError(f"no skill set for question {rec.question_id!r}") from None
        delta = 1 if rec.correct else -1
        for kw in skills:
            scores[kw] += delta
            touched.add(kw)
    # Counter arithmetic would drop zeros; keep every touched skill
    return ModelProfile(model_id, {kw: scores[kw] for kw in sorted(touched)})


@dataclass(frozen=True)
class AggregationItem:
    question_id: str
    question: str
    kind: str
    gold_answer: str
    cots: tuple[str, str, str]
    correct_position: int

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["cots"] = list(self.cots)
        return d


def build_aggregation_items(cot_records: Iterable[CotRecord], records: Sequence[ValidationRecord],
                            rng: np.random.Generator) -> list[AggregationItem]:
    """One synthetic item per eligible question: 1 correct and 2 incorrect
    chains drawn from all models' outputs, shuffled."""
    by_question: dict[str, list[CotRecord]] = defaultdict(list)
    for rec in cot_records:
        by_question[rec.question_id].append(rec)
    items = []
    for record in records:
        cots = by_question.get(record.question_id, [])
        correct = [c.cot_text for c in cots if c.correct]
        wrong = [c.cot_text for c in cots if not c.correct and c.cot_text]
        if not correct or len(wrong) < 2:
            continue
        chosen = [correct[rng.integers(len(correct))]]
        chosen += [wrong[i] for i in rng.choice(len(wrong), size=2, replace=False)]
        order = rng.permutation(3)
        items.append(AggregationItem(
            question_id=record.question_id,
            question=record.prompt_text,
            kind=record.kind,
            gold_answer=record.gold_answer,
            cots=tuple(chosen[i] for i in order),
            correct_position=int(np.flatnonzero(order == 0)[0]),
        ))
    if not items:
        raise AggregationTaskEmpty()
    return items


@dataclass(frozen=True)
class AggregatorProfile:
    model_id: str
    correct_items: int
    items_evaluated: int

    @property
    def aggregation_accuracy(self) -> float:
        return self.correct_items / self.items_evaluated

    def to_dict(self) -> dict:
        return {"model_id": self.model_id, "accuracy": self.aggregation_accuracy,
                "items": self.items_evaluated, "correct": self.correct_items}

    @classmethod
    def from_dict(cls, data: dict) -> "AggregatorProfile":
        return cls(data["model_id"], data["correct"], data["items"])


def aggregation_prompt(question: str, responses: Sequence[str], kind: str) -> str:
    return render_prompt("aggregate", {"question": question, "responses": list(responses), "answer_kind": kind})


def benchmark_aggregator(model: Backend, items: Sequence[AggregationItem]) -> AggregatorProfile:
    if not items:
        raise AggregationTaskEmpty()
    prompts = [aggregation_prompt(it.question, it.cots, it.kind) for it in items]
    correct = 0
    for item, res in zip(items, model.generate_many(prompts)):
        if res.ok and answers_match(extract_answer(res.text, item.kind), item.gold_answer, item.kind):
            correct += 1
    return AggregatorProfile(model.model_id, correct, len(items))


def select_aggregator(profiles: Sequence[AggregatorProfile],
                      model_profiles: Optional[Mapping[str, ModelProfile]] = None) -> str:
    """Best aggregation accuracy; ties by total profile score, then model_id."""
    if not profiles:
        raise InputError("no aggregator profiles")
    model_profiles = model_profiles or {}

    def key(p: AggregatorProfile):
        mp = model_profiles.get(p.model_id)
        accuracy = Fraction(p.correct_items, p.items_evaluated) if p.items_evaluated else Fraction(0)
        return (-accuracy,
                -(mp.total_score if mp else 0), p.model_id)

    return min(profiles, key=key).model_id


def write_profiles(path, profiles: Iterable[ModelProfile]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump([p.to_dict() for p in profiles], fh, indent=2, ensure_ascii=False)
        fh.write("\n")


def read_profiles(path) -> list[ModelProfile]:
    with open(path, encoding="utf-8") as fh:
        return [ModelProfile.from_dict(d) for d in json.load(fh)]

