"""Skill keyword annotation and consolidation."""
from __future__ import annotations

import json
import logging
import re
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .backend import Backend, GenerationResult, render_prompt
from .errors import InputError

log = logging.getLogger(__name__)

DEFAULT_REPEATS = 5
# keyword survives if seen in more than this many (question, pass) pairs
MIN_OCCURRENCES_EXCLUSIVE = 1

_MARKER = re.compile(r"keywords\s*:", re.IGNORECASE)
_EDGE_CHARS = "<>\"'`*.;:[]()"


def normalize_keyword(text: str) -> str:
    """Lowercase, strip edge punctuation, collapse whitespace.

    Applied until nothing changes, so the result is a fixed point.
    """
    prev = None
    s = text
    while s != prev:
        prev = s
        s = " ".join(s.strip().strip(_EDGE_CHARS).split()).lower()
    return s


def parse_keyword_line(raw: str) -> list[str]:
    """Keywords after the last ``Keywords:`` marker, normalized and deduplicated."""
    markers = list(_MARKER.finditer(raw or ""))
    if not markers:
        log.debug("keyword parse miss: %r", (raw or "")[:80])
        return []
    tail = raw[markers[-1].end():]
    # a trailing explanation on later lines is not part of the list
    tail = tail.strip().split("\n", 1)[0]
    out: list[str] = []
    for token in tail.split(","):
        kw = normalize_keyword(token)
        if kw and kw not in out:
            out.append(kw)
    return out


@dataclass(frozen=True)
class AnnotationRun:
    question_id: str
    repeats: tuple[tuple[str, ...], ...]

    def to_dict(self) -> dict:
        return {"question_id": self.question_id, "repeats": [list(r) for r in self.repeats]}

    @classmethod
    def from_dict(cls, data: dict) -> "AnnotationRun":
        return cls(data["question_id"], tuple(tuple(r) for r in data["repeats"]))


@dataclass(frozen=True)
class SkillSet:
    question_id: str
    keywords: frozenset[str]

    def to_dict(self) -> dict:
        return {"question_id": self.question_id, "keywords": sorted(self.keywords)}

    @classmethod
    def from_dict(cls, data: dict) -> "SkillSet":
        return cls(data["question_id"], frozenset(data["keywords"]))


def annotate_question(question: str, backend: Backend, repeats: int = DEFAULT_REPEATS,
                      question_id: str = "") -> AnnotationRun:
    """Run the keyword prompt ``repeats`` times and parse each completion.

    A pass whose generation fails after the backend's retries is recorded as
    an empty list.
    """
    return annotate_questions([(question_id, question)], backend, repeats)[0]


def annotate_questions(questions: Sequence[tuple[str, str]], backend: Backend,
                       repeats: int = DEFAULT_REPEATS) -> list[AnnotationRun]:
    """Batched :func:`annotate_question` over ``(question_id, question)`` pairs."""
    results = backend.generate_many(keyword_prompts(questions, repeats))
    return runs_from_results([qid for qid, _ in questions], results, repeats)


def keyword_prompts(questions: Sequence[tuple[str, str]], repeats: int) -> list[str]:
    """``repeats`` copies of the keyword prompt per question, question-major."""
    if repeats < 1:
        raise InputError("repeats must be >= 1")
    prompts = []
    for _, question in questions:
        prompts.extend([render_prompt("keyword", {"question": question})] * repeats)
    return prompts


def runs_from_results(question_ids: Sequence[str], results: Sequence[GenerationResult],
                      repeats: int) -> list[AnnotationRun]:
    runs = []
    for i, qid in enumerate(question_ids):
        chunk = results[i * repeats:(i + 1) * repeats]
        runs.append(AnnotationRun(qid, tuple(
            tuple(parse_keyword_line(r.text)) if r.ok else () for r in chunk
        )))
    return runs


def keyword_counts(runs: Iterable[AnnotationRun]) -> Counter:
    """Number of (question, pass) pairs in which each keyword occurs."""
    counts: Counter = Counter()
    for run in runs:
        for keywords in run.repeats:
            counts.update(set(keywords))
    return counts


def consolidate(runs: Sequence[AnnotationRun], scope: str = "global") -> dict[str, SkillSet]:
    """Keep the keywords of each question that occur more than once.

    ``scope="global"`` counts occurrences over every run in ``runs`` (used on
    the validation set); ``scope="question"`` counts only within a question's
    own passes (used for single test questions).
    """
    if scope not in ("global", "question"):
        raise InputError(f"unknown consolidation scope {scope!r}")
    global_counts = keyword_counts(runs) if scope == "global" else None
    out: dict[str, SkillSet] = {}
    for run in runs:
        counts = global_counts if global_counts is not None else keyword_counts([run])
        seen = {kw for keywords in run.repeats for kw in keywords}
        kept = frozenset(kw for kw in seen if counts[kw] > MIN_OCCURRENCES_EXCLUSIVE)
        previous = out.get(run.question_id)
        out[run.question_id] = SkillSet(run.question_id, kept | (previous.keywords if previous else frozenset()))
    return out


def write_skillsets(path, skillsets: Mapping[str, SkillSet]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for s in skillsets.values():
            fh.write(json.dumps(s.to_dict(), ensure_ascii=False) + "\n")


def read_skillsets(path) -> dict[str, SkillSet]:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                s = SkillSet.from_dict(json.loads(line))
                out[s.question_id] = s
    return out
