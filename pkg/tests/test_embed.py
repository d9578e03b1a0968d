import hashlib
import math
from collections import Counter

import httpx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from skillroute.embed import (
    Embedder,
    EmbeddingError,
    HashingProvider,
    RemoteProvider,
    cosine,
    make_embedder,
    match_keywords,
)
from skillroute.errors import ConfigError, InputError


def oracle_hash_cosine(a, b, dim=256):
    """Sparse trigram-count cosine, written independently of the provider."""
    def grams(text):
        s = "  " + text + " "
        c = Counter()
        for i in range(len(s) - 2):
            h = int.from_bytes(hashlib.blake2b(s[i:i + 3].encode(), digest_size=8).digest(), "little")
            c[h % dim] += 1
        return c
    ga, gb = grams(a), grams(b)
    dot = sum(ga[k] * gb[k] for k in ga)
    return dot / math.sqrt(sum(v * v for v in ga.values()) * sum(v * v for v in gb.values()))


# -- cosine --------------------------------------------------------------------

def test_cosine_examples():
    assert cosine([1, 2, 3], [1, 2, 3]) == pytest.approx(1.0)
    assert cosine([1, 0], [0, 1]) == 0.0
    assert cosine([1, 1], [1, 0]) == pytest.approx(1 / math.sqrt(2), abs=1e-6)
    assert cosine([1, 1], [1, 0]) == pytest.approx(0.7071, abs=1e-4)


def test_cosine_errors():
    with pytest.raises(ValueError):
        cosine([0, 0], [1, 0])
    with pytest.raises(ValueError):
        cosine([1, 0, 0], [1, 0])


@given(st.lists(st.floats(-1e3, 1e3), min_size=3, max_size=3), st.lists(st.floats(-1e3, 1e3), min_size=3, max_size=3))
def test_cosine_bounded(u, v):
    if np.linalg.norm(u) > 1e-6 and np.linalg.norm(v) > 1e-6:
        assert -1.0 <= cosine(u, v) <= 1.0


# -- hashing provider -------------------------------------------------------------

def test_hashing_unit_norm_and_dim(embedder):
    v = embedder.embed("algebra")
    assert v.shape == (256,)
    assert np.linalg.norm(v) == pytest.approx(1.0)
    assert np.all(np.isfinite(v))


def test_embedding_deterministic_and_cached():
    calls = []

    class Counting(HashingProvider):
        def embed_many(self, texts):
            calls.append(list(texts))
            return super().embed_many(texts)

    e = Embedder(Counting())
    a = e.embed("algebra")
    b = e.embed("algebra")
    assert np.array_equal(a, b)
    assert calls == [["algebra"]]
    assert np.array_equal(a, Embedder(HashingProvider()).embed("algebra"))


def test_empty_text_rejected(embedder):
    with pytest.raises(InputError):
        embedder.embed("")


def test_hashing_matches_oracle(embedder):
    for a, b in [("probability theory", "probability"), ("probability theory", "geometry"),
                 ("algebra", "linear algebra"), ("law", "poetry")]:
        assert cosine(embedder.embed(a), embedder.embed(b)) == pytest.approx(oracle_hash_cosine(a, b), abs=1e-12)


def test_unrelated_strings_low_similarity(embedder):
    assert oracle_hash_cosine("microbiology", "tax law") < 0.5
    assert cosine(embedder.embed("microbiology"), embedder.embed("tax law")) < 0.5


# -- matching ------------------------------------------------------------------

def test_exact_match_short_circuits(embedder):
    [m] = match_keywords(["algebra"], ["algebra", "geometry"], embedder)
    assert (m.profile_keyword, m.similarity) == ("algebra", 1.0)


def test_empty_test_set(embedder):
    assert match_keywords([], ["algebra"], embedder) == []


def test_empty_vocabulary(embedder):
    assert [m.profile_keyword for m in match_keywords(["a", "b"], [], embedder)] == [None, None]


def test_probability_theory_picks_higher_similarity(embedder):
    s_prob = oracle_hash_cosine("probability theory", "probability")
    s_geo = oracle_hash_cosine("probability theory", "geometry")
    assert s_prob > s_geo
    [m] = match_keywords(["probability theory"], ["probability", "geometry"], embedder, threshold=0.0)
    assert m.profile_keyword == "probability"
    assert m.similarity == pytest.approx(s_prob, abs=1e-12)
    [m] = match_keywords(["probability theory"], ["probability", "geometry"], embedder)
    assert m.profile_keyword == ("probability" if s_prob >= 0.7 else None)


def test_threshold_extremes(embedder):
    vocab = ["geometry", "law"]
    assert all(m.profile_keyword is not None
               for m in match_keywords(["poetry", "tax"], vocab, embedder, threshold=-1.0))
    above = match_keywords(["algebra", "geometric"], ["algebra", "geometry"], embedder, threshold=1.0 + 1e-9)
    assert [m.profile_keyword for m in above] == ["algebra", None]


_words = st.sampled_from(["algebra", "linear algebra", "geometry", "probability", "statistics",
                          "law", "tax law", "biology", "microbiology", "chemistry", "finance"])


@settings(max_examples=60, deadline=None)
@given(st.lists(_words, min_size=1, max_size=5), st.lists(_words, min_size=1, max_size=6),
       st.floats(-1, 1), st.floats(-1, 1), st.randoms())
def test_matching_properties(test, vocab, t1, t2, rnd):
    embedder = Embedder(HashingProvider())
    lo, hi = sorted((t1, t2))
    m_lo = match_keywords(test, vocab, embedder, lo)
    m_hi = match_keywords(test, vocab, embedder, hi)
    assert len(m_lo) == len(set(test))
    assert sum(m.profile_keyword is not None for m in m_hi) <= sum(m.profile_keyword is not None for m in m_lo)
    for m in m_hi:
        assert (m.profile_keyword is None) == (m.similarity < hi)
    shuffled = list(vocab)
    rnd.shuffle(shuffled)
    assert match_keywords(test, shuffled, embedder, hi) == m_hi


# -- remote provider --------------------------------------------------------------

def _remote(handler, dim=None):
    return RemoteProvider("http://emb/v1/embeddings", "e5", dim, client=httpx.Client(transport=httpx.MockTransport(handler)))


def test_remote_wire_shape():
    seen = {}

    def handler(request):
        import json
        seen.update(json.loads(request.content))
        return httpx.Response(200, json={"data": [{"embedding": [1.0, 0.0]}, {"embedding": [0.0, 2.0]}]})

    vecs = Embedder(_remote(handler)).embed_many(["a", "b"])
    assert seen == {"input": ["a", "b"], "model": "e5"}
    assert [list(v) for v in vecs] == [[1.0, 0.0], [0.0, 2.0]]


@pytest.mark.parametrize("response", [
    httpx.Response(500),
    httpx.Response(200, json={"oops": 1}),
    httpx.Response(200, json={"data": [{"embedding": [1.0, 2.0, 3.0]}]}),
    httpx.Response(200, json={"data": []}),
])
def test_remote_failures_surface(response):
    with pytest.raises(EmbeddingError):
        Embedder(_remote(lambda r: response, dim=2)).embed("a")


def test_make_embedder():
    assert make_embedder().provider.provider_id == "hashing-trigram-256"
    assert make_embedder({"provider": "hashing", "dim": 64}).provider.dim == 64
    with pytest.raises(ConfigError):
        make_embedder({"provider": "remote"})
    with pytest.raises(ConfigError):
        make_embedder({"provider": "bert"})
