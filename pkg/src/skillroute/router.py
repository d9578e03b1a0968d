"""Skill-based expert recruiting.

For a query with skill keywords ``K_q``, each model's relevance is its
global competency times its local suitability (the sum of its profile
scores over the matched keywords).  Experts are sampled from a tempered
softmax over relevance, and experts recruited too rarely over a whole test
set are trimmed and their slots resampled.
"""
from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .embed import DEFAULT_MATCH_THRESHOLD, Embedder, KeywordMatch, match_keywords
from .errors import ConfigError, InputError, InsufficientExpertsError
from .keywords import SkillSet
from .profile import ModelProfile

DEFAULT_K = 3
DEFAULT_TEMPERATURE = 0.5
DEFAULT_TRIM_FRAC = 0.05


@dataclass(frozen=True)
class RoutingParams:
    k: int = DEFAULT_K
    temperature: float = DEFAULT_TEMPERATURE
    trim_frac: float = DEFAULT_TRIM_FRAC
    seed: int = 0
    with_replacement: bool = False
    match_threshold: float = DEFAULT_MATCH_THRESHOLD

    def __post_init__(self):
        if self.k < 1:
            raise ConfigError("k must be >= 1")
        if not self.temperature > 0:
            raise ConfigError("temperature must be > 0")
        if not 0 <= self.trim_frac < 1:
            raise ConfigError("trim_frac must be in [0, 1)")


@dataclass(frozen=True)
class RoutingDistribution:
    query_id: str
    suitability: dict[str, float]
    competency: dict[str, float]
    relevance: dict[str, float]
    probabilities: dict[str, float]


@dataclass(frozen=True)
class ExpertAssignment:
    query_id: str
    experts: tuple[str, ...]
    probabilities: Mapping[str, float] = field(default_factory=dict, compare=False)

    def to_dict(self) -> dict:
        return {"query_id": self.query_id, "experts": list(self.experts),
                "probabilities": dict(self.probabilities)}

    @classmethod
    def from_dict(cls, data: dict) -> "ExpertAssignment":
        try:
            experts = data["experts"]
            if not isinstance(experts, list) or not all(isinstance(e, str) for e in experts):
                raise InputError("experts must be a list of model ids")
            return cls(str(data["query_id"]), tuple(experts), dict(data.get("probabilities", {})))
        except (KeyError, TypeError) as exc:
            raise InputError(f"malformed assignment: {exc}") from None


def local_suitability(profile: ModelProfile, matches: Iterable[KeywordMatch]) -> float:
    """Sum of the profile's scores over matched keywords; unmatched add 0."""
    total = 0
    for m in matches:
        if m.profile_keyword is not None:
            total += profile.skill_scores.get(m.profile_keyword, 0)
    return total


def global_competency(profiles: Sequence[ModelProfile]) -> dict[str, float]:
    """Total score of each model over the sum of all totals.

    Uniform when that sum is not positive (the ratio is meaningless there).
    """
    if not profiles:
        raise InputError("need at least one profile")
    totals = {p.model_id: p.total_score for p in profiles}
    denom = sum(totals.values())
    if denom <= 0:
        return {m: 1.0 / len(totals) for m in totals}
    return {m: t / denom for m, t in totals.items()}


def softmax(values: Sequence[float], temperature: float) -> np.ndarray:
    z = np.asarray(values, dtype=float) / temperature
    z = np.exp(z - z.max())
    return z / z.sum()


def categorical(p: np.ndarray, rng: np.random.Generator, size: Optional[int] = None):
    """Inverse-CDF draw(s) of indices from weights ``p`` (need not be normalized).

    All-zero weights are treated as uniform.
    """
    p = np.asarray(p, dtype=float)
    total = p.sum()
    if total <= 0:
        p = np.ones_like(p)
        total = float(len(p))
    cdf = np.cumsum(p)
    u = rng.random(size) * total
    idx = np.searchsorted(cdf, u, side="right")
    return np.minimum(idx, len(p) - 1)


def sample_experts(model_ids: Sequence[str], probabilities: Sequence[float], k: int,
                   rng: np.random.Generator, with_replacement: bool = False) -> tuple[str, ...]:
    """Draw ``k`` experts one at a time; without replacement each drawn
    expert is removed and the rest renormalized."""
    if not with_replacement and k > len(model_ids):
        raise ConfigError(f"k={k} exceeds pool of {len(model_ids)} models")
    ids = list(model_ids)
    p = np.array(probabilities, dtype=float)
    chosen = []
    for _ in range(k):
        i = int(categorical(p, rng))
        chosen.append(ids[i])
        if not with_replacement:
            ids.pop(i)
            p = np.delete(p, i)
    return tuple(chosen)


def routing_distribution(query: SkillSet, profiles: Sequence[ModelProfile], gamma: Mapping[str, float],
                         embedder: Embedder, temperature: float = DEFAULT_TEMPERATURE,
                         threshold: float = DEFAULT_MATCH_THRESHOLD,
                         vocabulary: Optional[Iterable[str]] = None) -> RoutingDistribution:
    if vocabulary is None:
        vocabulary = {kw for p in profiles for kw in p.skill_scores}
    matches = match_keywords(query.keywords, vocabulary, embedder, threshold)
    suitability = {p.model_id: local_suitability(p, matches) for p in profiles}
    relevance = {m: gamma[m] * s for m, s in suitability.items()}
    probs = softmax(list(relevance.values()), temperature)
    return RoutingDistribution(
        query_id=query.question_id,
        suitability=suitability,
        competency={p.model_id: gamma[p.model_id] for p in profiles},
        relevance=relevance,
        probabilities=dict(zip(relevance, probs.tolist())),
    )


def route(query: SkillSet, profiles: Sequence[ModelProfile], gamma: Mapping[str, float],
          params: RoutingParams, embedder: Embedder, rng: np.random.Generator,
          vocabulary: Optional[Iterable[str]] = None) -> tuple[RoutingDistribution, ExpertAssignment]:
    """Relevance distribution for one query plus ``params.k`` sampled experts."""
    if not params.with_replacement and params.k > len(profiles):
        raise ConfigError(f"k exceeds pool: k={params.k}, pool has {len(profiles)} models")
    dist = routing_distribution(query, profiles, gamma, embedder, params.temperature,
                                params.match_threshold, vocabulary)
    ids = list(dist.probabilities)
    experts = sample_experts(ids, list(dist.probabilities.values()), params.k, rng, params.with_replacement)
    return dist, ExpertAssignment(query.question_id, experts, dist.probabilities)


def trim_threshold(total_selections: int, frac: float) -> int:
    # tolerance absorbs float noise such as 0.07 * 100 == 7.000000000000001
    return math.ceil(frac * total_selections - 1e-9)


def expert_counts(assignments: Iterable[ExpertAssignment]) -> Counter:
    return Counter(e for a in assignments for e in a.experts)


def trim_and_resample(assignments: Sequence[ExpertAssignment], frac: float,
                      rng: np.random.Generator, with_replacement: bool = False) -> list[ExpertAssignment]:
    """Drop experts recruited fewer than ``ceil(frac * total_selections)``
    times and refill their slots from each query's own distribution,
    restricted to the surviving experts.  Repeats until stable.
    """
    if not assignments:
        raise InputError("no assignments to trim")
    if not 0 <= frac < 1:
        raise ConfigError("trim fraction must be in [0, 1)")
    out = list(assignments)
    total = sum(len(a.experts) for a in out)
    threshold = trim_threshold(total, frac)
    if threshold == 0:
        return out
    k = max(len(a.experts) for a in out)
    pool = list(dict.fromkeys(m for a in out for m in (*a.probabilities, *a.experts)))
    survivors = set(pool)
    while True:
        counts = expert_counts(out)
        below = {m for m in survivors if counts[m] < threshold}
        if not below:
            return out
        survivors -= below
        if len(survivors) < (1 if with_replacement else k):
            raise InsufficientExpertsError(
                f"insufficient surviving experts: {len(survivors)} left at threshold {threshold}, k={k}")
        out = [_refill(a, survivors, rng, with_replacement) for a in out]


def _refill(a: ExpertAssignment, survivors: set, rng: np.random.Generator,
            with_replacement: bool) -> ExpertAssignment:
    if all(e in survivors for e in a.experts):
        return a
    experts = list(a.experts)
    for slot, e in enumerate(experts):
        if e in survivors:
            continue
        taken = set() if with_replacement else {x for x in experts if x in survivors}
        candidates = [m for m in a.probabilities if m in survivors and m not in taken]
        if not candidates:  # probabilities missing from input; fall back to the survivor set
            candidates = sorted(m for m in survivors if m not in taken)
        weights = [a.probabilities.get(m, 0.0) for m in candidates]
        experts[slot] = candidates[int(categorical(weights, rng))]
    return replace(a, experts=tuple(experts))


def write_assignments(path, assignments: Iterable[ExpertAssignment]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for a in assignments:
            fh.write(json.dumps(a.to_dict(), ensure_ascii=False) + "\n")


def read_assignments(path) -> list[ExpertAssignment]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                data = json.loads(line)
            except json.JSONDecodeError as exc:
                raise InputError(f"{path}:{n}: invalid JSON: {exc}") from None
            if not isinstance(data, dict):
                raise InputError(f"{path}:{n}: expected a JSON object")
            out.append(ExpertAssignment.from_dict(data))
    return out
