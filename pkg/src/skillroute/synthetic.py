"""A small synthetic world of questions and skill-biased mock models.

Handy for demos and tests: every model is a :class:`MockBackend` whose
behaviour depends only on the question and the model's built-in strengths,
so runs are reproducible and the right answers are known.
"""
from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .backend import MULTIPLE_CHOICE, BackendConfig, MockBackend, extract_answer
from .config import PipelineConfig
from .pipeline import Backends
from .profile import ValidationRecord
from .router import RoutingParams

DEFAULT_SKILLS = ("algebra", "calculus", "geometry", "biology", "chemistry", "physics", "law", "finance")
DEFAULT_STRENGTHS = {
    "m0": ("algebra", "calculus"),
    "m1": ("geometry", "algebra"),
    "m2": ("biology", "chemistry"),
    "m3": ("physics", "chemistry"),
    "m4": ("law", "finance"),
    "m5": ("finance", "calculus"),
}
LABELS = "ABCD"
_QID = re.compile(r"\[([^\]\s]+)\]")


def question_id_in(prompt: str) -> Optional[str]:
    """The ``[qid]`` tag of the question a prompt is about."""
    m = _QID.search(prompt.rsplit("Question:", 1)[-1])
    return m.group(1) if m else None


@dataclass
class ToyWorld:
    questions: list[ValidationRecord]
    question_skills: dict[str, tuple[str, ...]]
    strengths: dict[str, frozenset]

    @property
    def model_ids(self) -> list[str]:
        return list(self.strengths)

    def knows(self, model_id: str, qid: str) -> bool:
        return bool(self.strengths[model_id] & set(self.question_skills[qid]))

    def gold(self, qid: str) -> str:
        return self._by_id[qid].gold_answer

    def answer(self, model_id: str, qid: str) -> str:
        """Gold if the model has a relevant strength, else a fixed wrong label."""
        gold = self.gold(qid)
        return gold if self.knows(model_id, qid) else LABELS[(LABELS.index(gold) + 1) % len(LABELS)]

    def __post_init__(self):
        self._by_id = {q.question_id: q for q in self.questions}

    # -- mock responders ---------------------------------------------------

    def cot_text(self, model_id: str, qid: str) -> str:
        return f"{model_id} works through the problem step by step. The answer is ({self.answer(model_id, qid)})."

    def respond(self, model_id: str, prompt: str) -> str:
        qid = question_id_in(prompt)
        if prompt.startswith("You have been provided"):
            if self.knows(model_id, qid):
                final = self.gold(qid)
            else:
                section = prompt.split("Responses from models:", 1)[1].rsplit("Question:", 1)[0]
                answers = [extract_answer(block, MULTIPLE_CHOICE) for block in section.split("\n\n")]
                answers = [a for a in answers if a]
                counts = Counter(answers)
                final = max(answers, key=lambda a: counts[a]) if answers else "A"
            return f"{model_id} weighs the responses. The answer is ({final})."
        if prompt.startswith("You are one of several"):
            return f"{model_id} keeps its view. The answer is ({self.answer(model_id, qid)})."
        return self.cot_text(model_id, qid)

    def keyword_line(self, qid: str) -> str:
        return "Keywords: " + ", ".join(s.title() for s in self.question_skills[qid])

    # -- wiring ------------------------------------------------------------

    def backend_configs(self) -> tuple[BackendConfig, ...]:
        return tuple(BackendConfig(m, "mock:synthetic") for m in self.model_ids)

    def backends(self, in_flight_limit: int = 1) -> Backends:
        pool = {
            m: MockBackend(BackendConfig(m, "mock:synthetic", in_flight_limit=in_flight_limit),
                           responder=lambda prompt, _n, m=m: self.respond(m, prompt))
            for m in self.model_ids
        }
        keyword = MockBackend(BackendConfig("keyword-model", "mock:synthetic"),
                              responder=lambda prompt, _n: self.keyword_line(question_id_in(prompt)))
        return Backends(pool=pool, keyword=keyword)

    def config(self, **routing) -> PipelineConfig:
        extra = {k: routing.pop(k) for k in ("workers", "discussion_rounds") if k in routing}
        return PipelineConfig(
            model_pool=self.backend_configs(),
            keyword_model=BackendConfig("keyword-model", "mock:synthetic"),
            routing=RoutingParams(**routing),
            **extra,
        )


def make_world(n_questions: int, seed: int = 0, prefix: str = "q",
               skills: Sequence[str] = DEFAULT_SKILLS, strengths: Optional[dict] = None) -> ToyWorld:
    """Four-option questions, each needing two skills drawn at random."""
    rng = np.random.default_rng(seed)
    strengths = {m: frozenset(s) for m, s in (strengths or DEFAULT_STRENGTHS).items()}
    questions, qskills = [], {}
    for i in range(n_questions):
        qid = f"{prefix}{i:03d}"
        picked = tuple(sorted(skills[j] for j in rng.choice(len(skills), size=2, replace=False)))
        qskills[qid] = picked
        questions.append(ValidationRecord(
            question_id=qid,
            question=f"[{qid}] A problem that needs {picked[0]} and {picked[1]}. Which option is right?",
            kind=MULTIPLE_CHOICE,
            choices=tuple((label, f"option {label.lower()}") for label in LABELS),
            gold_answer=LABELS[int(rng.integers(len(LABELS)))],
        ))
    return ToyWorld(questions, qskills, strengths)
