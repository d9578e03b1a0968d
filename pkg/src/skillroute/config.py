"""Pipeline configuration: one YAML/JSON document, hashed for resumability."""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional

import yaml

from .backend import BackendConfig
from .errors import ConfigError, InputError
from .keywords import DEFAULT_REPEATS
from .router import RoutingParams
from .scheduler import CostModel


@dataclass(frozen=True)
class PipelineConfig:
    model_pool: tuple[BackendConfig, ...]
    keyword_model: BackendConfig
    embedding: dict = field(default_factory=lambda: {"provider": "hashing", "dim": 256})
    routing: RoutingParams = RoutingParams()
    workers: int = 1
    discussion_rounds: int = 0
    keyword_repeats: int = DEFAULT_REPEATS
    keyword_scope: str = "global"
    profile_seed: int = 0
    cost_model: CostModel = CostModel()
    base_dir: Optional[str] = field(default=None, compare=False)

    def __post_init__(self):
        if not self.model_pool:
            raise ConfigError("model pool is empty")
        ids = [m.model_id for m in self.model_pool]
        if len(set(ids)) != len(ids):
            raise ConfigError("duplicate model_id in model pool")
        if not self.routing.with_replacement and self.routing.k > len(self.model_pool):
            raise ConfigError(f"k exceeds pool: k={self.routing.k}, pool has {len(self.model_pool)} models")
        if self.discussion_rounds not in (0, 1):
            raise ConfigError("discussion_rounds must be 0 or 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.keyword_repeats < 1:
            raise ConfigError("keyword repeats must be >= 1")
        if self.keyword_scope not in ("global", "question"):
            raise ConfigError("keyword_scope must be 'global' or 'question'")

    @property
    def model_ids(self) -> list[str]:
        return [m.model_id for m in self.model_pool]

    def to_dict(self) -> dict:
        return {
            "models": [m.to_dict() for m in self.model_pool],
            "keyword_model": self.keyword_model.to_dict(),
            "embedding": dict(self.embedding),
            "routing": asdict(self.routing),
            "workers": self.workers,
            "discussion_rounds": self.discussion_rounds,
            "keywords": {"repeats": self.keyword_repeats, "scope": self.keyword_scope},
            "profile_seed": self.profile_seed,
            "cost_model": asdict(self.cost_model),
        }

    def preprocess_hash(self) -> str:
        d = self.to_dict()
        return _digest({k: d[k] for k in ("models", "keyword_model", "keywords", "profile_seed")})

    def run_hash(self, *extra) -> str:
        return _digest([self.to_dict(), *extra])

    def with_routing(self, **changes) -> "PipelineConfig":
        return replace(self, routing=replace(self.routing, **changes))

    @classmethod
    def from_dict(cls, data: dict, base_dir=None) -> "PipelineConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a mapping")
        known = {"models", "keyword_model", "embedding", "routing", "workers",
                 "discussion_rounds", "keywords", "profile_seed", "cost_model"}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            models = tuple(BackendConfig.from_dict(m) for m in data["models"])
            keyword_model = BackendConfig.from_dict(data["keyword_model"])
        except KeyError as exc:
            raise ConfigError(f"config missing {exc}") from None
        keywords = data.get("keywords", {})
        try:
            return cls(
                model_pool=models,
                keyword_model=keyword_model,
                embedding=data.get("embedding", {"provider": "hashing", "dim": 256}),
                routing=RoutingParams(**data.get("routing", {})),
                workers=int(data.get("workers", 1)),
                discussion_rounds=int(data.get("discussion_rounds", 0)),
                keyword_repeats=int(keywords.get("repeats", DEFAULT_REPEATS)),
                keyword_scope=keywords.get("scope", "global"),
                profile_seed=int(data.get("profile_seed", 0)),
                cost_model=CostModel(**data.get("cost_model", {})),
                base_dir=None if base_dir is None else str(base_dir),
            )
        except TypeError as exc:
            raise ConfigError(str(exc)) from None


def load_config(path) -> PipelineConfig:
    path = Path(path)
    if not path.is_file():
        raise InputError(f"config file not found: {path}")
    try:
        data = yaml.safe_load(path.read_text("utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return PipelineConfig.from_dict(data, base_dir=path.resolve().parent)


def _digest(obj) -> str:
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()
