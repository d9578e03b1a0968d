"""Keyword embeddings and cosine matching against profile vocabularies."""
from __future__ import annotations

import hashlib
import os
import threading
from dataclasses import dataclass
from typing import Iterable, Optional, Protocol, Sequence

import httpx
import numpy as np

from .errors import ConfigError, InputError

DEFAULT_MATCH_THRESHOLD = 0.7
DEFAULT_HASH_DIM = 256


class EmbeddingError(RuntimeError):
    pass


class EmbeddingProvider(Protocol):
    provider_id: str
    dim: int

    def embed_many(self, texts: Sequence[str]) -> np.ndarray: ...


class HashingProvider:
    """Character-trigram feature hashing, unit-normalized.

    Offline and bit-reproducible; strings sharing many trigrams get high
    cosine similarity.
    """

    def __init__(self, dim: int = DEFAULT_HASH_DIM):
        if dim < 1:
            raise ConfigError("embedding dimension must be >= 1")
        self.dim = dim
        self.provider_id = f"hashing-trigram-{dim}"

    def _bucket(self, gram: str) -> int:
        digest = hashlib.blake2b(gram.encode("utf-8"), digest_size=8).digest()
        return int.from_bytes(digest, "little") % self.dim

    def embed_one(self, text: str) -> np.ndarray:
        padded = f"  {text} "
        vec = np.zeros(self.dim)
        for i in range(len(padded) - 2):
            vec[self._bucket(padded[i:i + 3])] += 1.0
        return vec / np.linalg.norm(vec)

    def embed_many(self, texts: Sequence[str]) -> np.ndarray:
        return np.stack([self.embed_one(t) for t in texts]) if texts else np.zeros((0, self.dim))


class RemoteProvider:
    """Embeddings over HTTP: POST ``{"input": [...], "model": m}`` and read
    ``data[i].embedding``."""

    def __init__(self, url: str, model: str, dim: Optional[int] = None,
                 api_key_env: str = "SKILLROUTE_API_KEY", client: Optional[httpx.Client] = None):
        self.url = url
        self.model = model
        self.dim = dim
        self.api_key_env = api_key_env
        self.provider_id = f"remote:{model}@{url}"
        self._client = client or httpx.Client(timeout=60.0)

    def embed_many(self, texts: Sequence[str]) -> np.ndarray:
        headers = {}
        key = os.environ.get(self.api_key_env)
        if key:
            headers["Authorization"] = f"Bearer {key}"
        try:
            resp = self._client.post(self.url, json={"input": list(texts), "model": self.model}, headers=headers)
            resp.raise_for_status()
            data = resp.json()["data"]
            vectors = np.array([row["embedding"] for row in data], dtype=float)
        except (httpx.HTTPError, ValueError, KeyError, TypeError) as exc:
            raise EmbeddingError(f"embedding request failed: {exc}") from exc
        if vectors.ndim != 2 or len(vectors) != len(texts):
            raise EmbeddingError(f"expected {len(texts)} embeddings, got shape {vectors.shape}")
        if self.dim is None:
            self.dim = vectors.shape[1]
        elif vectors.shape[1] != self.dim:
            raise EmbeddingError(f"expected dimension {self.dim}, got {vectors.shape[1]}")
        if not np.all(np.isfinite(vectors)):
            raise EmbeddingError("provider returned non-finite values")
        return vectors


class Embedder:
    """Caches provider output keyed by ``(provider_id, text)``."""

    def __init__(self, provider: EmbeddingProvider):
        self.provider = provider
        self._cache: dict[tuple[str, str], np.ndarray] = {}
        self._lock = threading.Lock()

    def embed(self, text: str) -> np.ndarray:
        return self.embed_many([text])[0]

    def embed_many(self, texts: Sequence[str]) -> list[np.ndarray]:
        pid = self.provider.provider_id
        for t in texts:
            if not t:
                raise InputError("cannot embed empty text")
        missing = list(dict.fromkeys(t for t in texts if (pid, t) not in self._cache))
        if missing:
            vectors = self.provider.embed_many(missing)
            with self._lock:
                for t, v in zip(missing, vectors):
                    v = np.asarray(v, dtype=float)
                    v.setflags(write=False)
                    self._cache.setdefault((pid, t), v)
        return [self._cache[(pid, t)] for t in texts]


def cosine(u, v) -> float:
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0 or nv == 0:
        raise ValueError("cosine undefined for zero-norm vector")
    return float(np.clip(np.dot(u, v) / (nu * nv), -1.0, 1.0))


@dataclass(frozen=True)
class KeywordMatch:
    test_keyword: str
    profile_keyword: Optional[str]
    similarity: float


def match_keywords(test: Iterable[str], vocabulary: Iterable[str], embedder: Embedder,
                   threshold: float = DEFAULT_MATCH_THRESHOLD) -> list[KeywordMatch]:
    """Map each test keyword to its most similar vocabulary keyword.

    Exact string equality wins outright with similarity 1.0.  Below
    ``threshold`` the match is ``None``.  Ties go to the lexicographically
    smallest vocabulary keyword, so the result does not depend on ordering.
    Output is sorted by test keyword.
    """
    test_kws = sorted(set(test))
    vocab = sorted(set(vocabulary))
    if not test_kws:
        return []
    if not vocab:
        return [KeywordMatch(kw, None, 0.0) for kw in test_kws]
    vocab_set = set(vocab)
    need = [kw for kw in test_kws if kw not in vocab_set]
    sims = None
    if need:
        V = np.stack(embedder.embed_many(vocab))
        T = np.stack(embedder.embed_many(need))
        V = V / np.linalg.norm(V, axis=1, keepdims=True)
        T = T / np.linalg.norm(T, axis=1, keepdims=True)
        sims = np.clip(T @ V.T, -1.0, 1.0)
    out = []
    row = 0
    for kw in test_kws:
        if kw in vocab_set:
            out.append(KeywordMatch(kw, kw, 1.0))
            continue
        s = sims[row]
        row += 1
        best = int(np.argmax(s))  # first max, vocab is sorted
        sim = float(s[best])
        out.append(KeywordMatch(kw, vocab[best] if sim >= threshold else None, sim))
    return out


def make_embedder(settings: Optional[dict] = None, client: Optional[httpx.Client] = None) -> Embedder:
    settings = dict(settings or {})
    kind = settings.pop("provider", "hashing")
    if kind == "hashing":
        return Embedder(HashingProvider(int(settings.get("dim", DEFAULT_HASH_DIM))))
    if kind == "remote":
        try:
            return Embedder(RemoteProvider(settings["url"], settings["model"], settings.get("dim"),
                                           settings.get("api_key_env", "SKILLROUTE_API_KEY"), client))
        except KeyError as exc:
            raise ConfigError(f"remote embedding provider needs {exc}") from None
    raise ConfigError(f"unknown embedding provider {kind!r}")
