"""Embedding providers: hashed, tf-idf, and the service client."""
import hashlib
import json
import math

import httpx
import numpy as np
import pytest

from structsumm.embeddings import (HashedEmbedder, ProviderConfig,
                                   ServiceEmbedder, TfidfEmbedder, cosine,
                                   cosine_matrix, make_embedder,
                                   section_embedding)
from structsumm.errors import ProtocolError, RemoteEmbeddingError


def _independent_buckets(text: str, dim: int) -> set[int]:
    """Reference bucket computation used to certify fixture disjointness."""
    tokens = text.lower().split()
    features = tokens + [f"{a} {b}" for a, b in zip(tokens, tokens[1:])]
    out = set()
    for feat in features:
        h = int.from_bytes(
            hashlib.blake2b(feat.encode("utf-8"), digest_size=8).digest(), "big")
        out.add(h % dim)
    return out


# ---------------------------------------------------------------------------
# hashed provider
# ---------------------------------------------------------------------------

def test_hashed_rows_unit_norm():
    X = HashedEmbedder(dim=64).fit([]).transform(
        ["The appeal is allowed.", "Costs follow the event.", ""])
    norms = np.linalg.norm(X, axis=1)
    assert norms[0] == pytest.approx(1.0, abs=1e-12)
    assert norms[1] == pytest.approx(1.0, abs=1e-12)
    assert norms[2] == 0.0  # empty sentence stays a zero row


def test_hashed_identical_sentences_cosine_one():
    X = HashedEmbedder().fit([]).transform(["Same words here.", "Same words here."])
    assert cosine(X[0], X[1]) == pytest.approx(1.0, abs=1e-12)


def test_hashed_bucket_disjoint_pair_cosine_zero():
    dim = 256
    a, b = "alpha beta", "gamma delta"
    assert not (_independent_buckets(a, dim) & _independent_buckets(b, dim))
    X = HashedEmbedder(dim=dim).fit([]).transform([a, b])
    assert cosine(X[0], X[1]) == 0.0


def test_hashed_deterministic_across_instances():
    texts = ["First sentence.", "Second sentence with more words."]
    X1 = HashedEmbedder(dim=128).fit([]).transform(texts)
    X2 = HashedEmbedder(dim=128).fit([]).transform(texts)
    assert np.array_equal(X1, X2)


def test_hashed_dim_floor():
    with pytest.raises(ValueError):
        HashedEmbedder(dim=8).fit([])


def test_cosine_symmetry_and_range():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((10, 16))
    for i in range(9):
        u, v = X[i], X[i + 1]
        assert cosine(u, v) == pytest.approx(cosine(v, u), abs=1e-15)
        assert -1.0 - 1e-12 <= cosine(u, v) <= 1.0 + 1e-12
        assert cosine(u, u) == pytest.approx(1.0, abs=1e-12)


def test_cosine_zero_vector_is_zero():
    assert cosine(np.zeros(4), np.ones(4)) == 0.0


# ---------------------------------------------------------------------------
# tf-idf provider
# ---------------------------------------------------------------------------

_TOY = ["apple banana apple", "banana cherry", "cherry apple date"]


def test_tfidf_three_doc_toy_matches_hand_computation():
    emb = TfidfEmbedder().fit(_TOY)
    assert emb.vocabulary == ["apple", "banana", "cherry", "date"]
    X = emb.transform(_TOY)

    # idf = ln((1+N)/(1+df)) + 1 with N=3; df(apple)=df(banana)=df(cherry)=2, df(date)=1
    idf_common = math.log(4 / 3) + 1.0
    idf_date = math.log(4 / 2) + 1.0

    # row 0: tf = (2, 1, 0, 0); shared idf cancels under L2 normalization
    expected0 = np.array([2.0, 1.0, 0.0, 0.0]) / math.sqrt(5.0)
    assert np.allclose(X[0], expected0, atol=1e-12)

    # row 2: tf = (1, 0, 1, 1) with mixed idf values
    raw2 = np.array([idf_common, 0.0, idf_common, idf_date])
    assert np.allclose(X[2], raw2 / np.linalg.norm(raw2), atol=1e-12)


def test_tfidf_term_in_all_docs_has_unit_idf():
    emb = TfidfEmbedder().fit(["apple one", "apple two", "apple three"])
    X = emb.transform(["apple one"])
    vocab = emb.vocabulary
    v_apple = X[0][vocab.index("apple")]
    v_one = X[0][vocab.index("one")]
    # df(apple)=3=N so idf(apple)=1; df(one)=1 so idf(one)=ln(2)+1
    assert v_one / v_apple == pytest.approx(math.log(2) + 1.0, abs=1e-12)


def test_tfidf_oov_sentence_is_zero_row():
    emb = TfidfEmbedder().fit(_TOY)
    X = emb.transform(["zucchini fennel"])
    assert np.all(X[0] == 0.0)


def test_tfidf_deterministic():
    X1 = TfidfEmbedder().fit(_TOY).transform(_TOY)
    X2 = TfidfEmbedder().fit(_TOY).transform(_TOY)
    assert np.array_equal(X1, X2)


def test_tfidf_requires_fit():
    with pytest.raises(RuntimeError):
        TfidfEmbedder().transform(["text"])


# ---------------------------------------------------------------------------
# section embeddings
# ---------------------------------------------------------------------------

def test_section_embedding_single_sentence_identity():
    X = HashedEmbedder(dim=32).fit([]).transform(["Only sentence."])
    assert np.array_equal(section_embedding(X, [0]), X[0])


def test_section_embedding_antipodal_is_zero():
    X = np.array([[1.0, 0.0], [-1.0, 0.0]])
    assert np.all(section_embedding(X, [0, 1]) == 0.0)


def test_section_embedding_matches_brute_force_mean():
    rng = np.random.default_rng(3)
    X = rng.standard_normal((5, 8))
    X /= np.linalg.norm(X, axis=1, keepdims=True)
    expected = X[[1, 2, 4]].mean(axis=0)
    expected /= np.linalg.norm(expected)
    assert np.allclose(section_embedding(X, [1, 2, 4]), expected, atol=1e-12)


def test_cosine_matrix_diagonal_ones():
    X = HashedEmbedder(dim=64).fit([]).transform(["One here.", "Two there."])
    S = cosine_matrix(X)
    assert np.allclose(np.diag(S), 1.0, atol=1e-12)


# ---------------------------------------------------------------------------
# service client (mocked transport)
# ---------------------------------------------------------------------------

_DIM = 4


def _fake_vector(text: str) -> list[float]:
    h = hashlib.sha256(text.encode()).digest()
    v = np.frombuffer(h[:_DIM * 8], dtype=np.uint64).astype(np.float64)
    v = v / np.linalg.norm(v)
    return v.tolist()


def _service_handler(calls: list, dim: int = _DIM, fail_first: int = 0):
    state = {"failures": 0}

    def handler(request: httpx.Request) -> httpx.Response:
        if request.url.path == "/health":
            return httpx.Response(200, json={"status": "ok", "model": "toy", "dim": dim})
        if request.url.path == "/embed":
            if state["failures"] < fail_first:
                state["failures"] += 1
                return httpx.Response(500, json={"error": "warming up"})
            payload = json.loads(request.content)
            calls.append(len(payload["texts"]))
            return httpx.Response(200, json={
                "model": payload["model"],
                "dim": dim,
                "vectors": [_fake_vector(t) for t in payload["texts"]],
            })
        return httpx.Response(404)

    return handler


def _client(handler, **kwargs) -> ServiceEmbedder:
    return ServiceEmbedder("http://svc.test", backoff=0.0,
                           transport=httpx.MockTransport(handler), **kwargs)


def test_service_round_trip_order_and_norms():
    calls: list[int] = []
    emb = _client(_service_handler(calls))
    texts = [f"sentence number {i}" for i in range(5)]
    X = emb.transform(texts)
    assert X.shape == (5, _DIM)
    assert np.allclose(np.linalg.norm(X, axis=1), 1.0, atol=1e-9)
    for i, text in enumerate(texts):
        assert np.allclose(X[i], np.asarray(_fake_vector(text)), atol=1e-9)


def test_service_chunks_at_batch_size():
    calls: list[int] = []
    emb = _client(_service_handler(calls))
    emb.transform([f"s{i}" for i in range(300)])
    assert calls == [128, 128, 44]


def test_service_empty_input_sends_no_request():
    calls: list[int] = []
    requests_seen = []

    def handler(request):
        requests_seen.append(request.url.path)
        return _service_handler(calls)(request)

    emb = _client(handler)
    X = emb.transform([])
    assert X.shape[0] == 0
    assert requests_seen == []


def test_service_dim_change_raises_protocol_error():
    state = {"n": 0}

    def handler(request: httpx.Request) -> httpx.Response:
        if request.url.path == "/health":
            return httpx.Response(200, json={"status": "ok", "model": "toy", "dim": 4})
        payload = json.loads(request.content)
        state["n"] += 1
        dim = 4 if state["n"] == 1 else 3
        return httpx.Response(200, json={
            "model": "toy", "dim": dim,
            "vectors": [[1.0] + [0.0] * (dim - 1) for _ in payload["texts"]]})

    emb = _client(handler, batch_size=2)
    with pytest.raises(ProtocolError):
        emb.transform(["a", "b", "c", "d"])


def test_service_wrong_vector_count_raises():
    def handler(request: httpx.Request) -> httpx.Response:
        if request.url.path == "/health":
            return httpx.Response(200, json={"status": "ok", "model": "toy", "dim": 2})
        return httpx.Response(200, json={"model": "toy", "dim": 2,
                                         "vectors": [[1.0, 0.0]]})

    emb = _client(handler)
    with pytest.raises(ProtocolError):
        emb.transform(["a", "b"])


def test_service_retries_then_succeeds():
    calls: list[int] = []
    emb = _client(_service_handler(calls, fail_first=2))
    X = emb.transform(["hello"])
    assert X.shape == (1, _DIM)


def test_service_exhausted_retries_raise():
    def handler(request: httpx.Request) -> httpx.Response:
        if request.url.path == "/health":
            return httpx.Response(200, json={"status": "ok", "model": "toy", "dim": 2})
        return httpx.Response(500, json={"error": "down"})

    emb = _client(handler, max_retries=2)
    with pytest.raises(RemoteEmbeddingError, match="3 attempts"):
        emb.transform(["a"])


def test_service_cache_avoids_second_round_trip(tmp_path):
    calls: list[int] = []
    emb = _client(_service_handler(calls), cache_path=str(tmp_path))
    texts = ["first text", "second text"]
    X1 = emb.transform(texts)
    assert calls == [2]
    X2 = emb.transform(texts)
    assert calls == [2]  # all hits, no new embed request
    assert np.array_equal(X1, X2)

    fresh = _client(_service_handler(calls), cache_path=str(tmp_path))
    X3 = fresh.transform(texts)
    assert calls == [2]  # cache shared across client instances
    assert np.allclose(X3, X1, atol=1e-12)


def test_service_health_payload():
    emb = _client(_service_handler([]))
    payload = emb.health()
    assert payload["status"] == "ok"
    assert payload["dim"] == _DIM
    assert emb.fingerprint() == f"service:model=toy:dim={_DIM}"


# ---------------------------------------------------------------------------
# provider construction
# ---------------------------------------------------------------------------

def test_make_embedder_kinds():
    assert isinstance(make_embedder(ProviderConfig(kind="hashed")), HashedEmbedder)
    assert isinstance(make_embedder(ProviderConfig(kind="tfidf")), TfidfEmbedder)
    svc = make_embedder(ProviderConfig(kind="service", service_url="http://x"))
    assert isinstance(svc, ServiceEmbedder)


def test_provider_config_validation():
    with pytest.raises(ValueError):
        ProviderConfig(kind="magic")
    with pytest.raises(ValueError):
        ProviderConfig(kind="service")


def test_fingerprints_distinguish_providers():
    h = HashedEmbedder(dim=64)
    t = TfidfEmbedder().fit(_TOY)
    assert h.fingerprint() != t.fingerprint()
    assert h.fingerprint() == HashedEmbedder(dim=64).fingerprint()
