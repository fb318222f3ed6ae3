"""Sentence embedding providers behind one contract.

An embedding matrix is a float64 ndarray of shape (n, dim) whose rows are
L2-normalized, except that an empty sentence maps to the zero row. Providers
are sklearn-style transformers: ``fit(texts)`` then ``transform(texts)``.
Hashed and Tfidf run fully offline and bitwise-deterministically; Service
talks to the external embedding microservice.
"""
from __future__ import annotations

import hashlib
import json
import os
import re
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.feature_extraction.text import TfidfVectorizer

from .errors import ProtocolError, RemoteEmbeddingError
from .types import Section
from .validation import normalize_rows

_TOKEN_RE = re.compile(r"[a-z0-9]+")

DEFAULT_HASHED_DIM = 256
SERVICE_MAX_BATCH = 128


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


@dataclass
class ProviderConfig:
    """Which provider to build and how."""

    kind: str = "hashed"  # hashed | tfidf | service
    dim: int = DEFAULT_HASHED_DIM
    service_url: Optional[str] = None
    cache_path: Optional[str] = None

    def __post_init__(self):
        if self.kind not in ("hashed", "tfidf", "service"):
            raise ValueError(f"unknown provider kind {self.kind!r}")
        if self.kind == "service" and not self.service_url:
            raise ValueError("service provider requires service_url")


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine similarity; zero vectors have similarity 0 with everything."""
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float(np.dot(u, v) / (nu * nv))


def cosine_matrix(X: np.ndarray) -> np.ndarray:
    """All-pairs cosine similarity; zero rows give zero similarities."""
    U = normalize_rows(X)
    return U @ U.T


def section_embedding(X: np.ndarray, section: Section | Sequence[int]) -> np.ndarray:
    """Mean of a section's sentence vectors, L2-normalized (zero stays zero)."""
    indices = list(section.sentence_indices) if isinstance(section, Section) else list(section)
    if not indices:
        raise ValueError("section is empty")
    mean = np.asarray(X, dtype=np.float64)[indices].mean(axis=0)
    norm = np.linalg.norm(mean)
    return mean / norm if norm > 0 else mean


def _stable_hash(token: str) -> int:
    digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big")


class HashedEmbedder(TransformerMixin, BaseEstimator):
    """Signed feature hashing of word unigrams and bigrams.

    Corpus-independent and deterministic across runs and platforms (the hash
    is blake2b, not Python's salted hash). fit is a no-op.
    """

    def __init__(self, dim: int = DEFAULT_HASHED_DIM):
        self.dim = dim

    def fit(self, X=None, y=None):
        if self.dim < 16:
            raise ValueError("hashed embedder needs dim >= 16")
        return self

    def transform(self, X: Sequence[str]) -> np.ndarray:
        self.fit()
        out = np.zeros((len(X), self.dim), dtype=np.float64)
        for row, text in enumerate(X):
            tokens = tokenize(text)
            features = tokens + [f"{a} {b}" for a, b in zip(tokens, tokens[1:])]
            for feat in features:
                h = _stable_hash(feat)
                sign = 1.0 if h & (1 << 63) else -1.0
                out[row, h % self.dim] += sign
        return normalize_rows(out)

    def fingerprint(self) -> str:
        return f"hashed:dim={self.dim}"


class TfidfEmbedder(TransformerMixin, BaseEstimator):
    """tf-idf rows with idf = ln((1+N)/(1+df)) + 1 and L2 normalization.

    Backed by sklearn's TfidfVectorizer, pinned to the package tokenization
    (lowercase, alphanumeric runs) and a lexicographically sorted vocabulary
    so column order is deterministic.
    """

    def __init__(self):
        self._vectorizer = None

    def fit(self, X: Sequence[str], y=None):
        self._vectorizer = TfidfVectorizer(
            lowercase=True,
            token_pattern=r"[a-z0-9]+",
            norm="l2",
            smooth_idf=True,
            sublinear_tf=False,
        )
        self._vectorizer.fit(list(X))
        return self

    def transform(self, X: Sequence[str]) -> np.ndarray:
        if self._vectorizer is None:
            raise RuntimeError("TfidfEmbedder must be fit before transform")
        return self._vectorizer.transform(list(X)).toarray().astype(np.float64)

    @property
    def vocabulary(self) -> list[str]:
        if self._vectorizer is None:
            raise RuntimeError("TfidfEmbedder must be fit first")
        return list(self._vectorizer.get_feature_names_out())

    def fingerprint(self) -> str:
        vocab = "\n".join(self.vocabulary)
        vhash = hashlib.sha1(vocab.encode("utf-8")).hexdigest()[:12]
        return f"tfidf:dim={len(self.vocabulary)}:vocab={vhash}"


class ServiceEmbedder(TransformerMixin, BaseEstimator):
    """Client for the embedding microservice.

    Wire protocol: POST {service_url}/embed with {"model": m, "texts": [...]}
    returning {"model": m, "dim": d, "vectors": [[...], ...]}; GET /health
    returns {"status": "ok", "model": m, "dim": d}. Inputs are chunked to at
    most ``batch_size`` texts per request and rows come back in request
    order. Rows are renormalized client-side. Responses are cached per
    (model, sentence) under ``cache_path`` when set.
    """

    def __init__(self, service_url: str, batch_size: int = SERVICE_MAX_BATCH,
                 cache_path: Optional[str] = None, max_retries: int = 3,
                 backoff: float = 0.25, timeout: float = 30.0, transport=None):
        self.service_url = service_url
        self.batch_size = batch_size
        self.cache_path = cache_path
        self.max_retries = max_retries
        self.backoff = backoff
        self.timeout = timeout
        self.transport = transport
        self._client = None
        self._model: Optional[str] = None
        self._dim: Optional[int] = None

    # httpx clients do not survive pickling into worker processes
    def __getstate__(self):
        state = self.__dict__.copy()
        state["_client"] = None
        return state

    def _http(self):
        import httpx

        if self._client is None:
            self._client = httpx.Client(base_url=self.service_url.rstrip("/"),
                                        timeout=self.timeout,
                                        transport=self.transport)
        return self._client

    def _request(self, method: str, path: str, **kwargs):
        import httpx

        last_error: Exception | None = None
        for attempt in range(self.max_retries + 1):
            try:
                response = self._http().request(method, path, **kwargs)
                if response.status_code >= 500:
                    raise RemoteEmbeddingError(
                        f"{path} returned {response.status_code}")
                return response
            except (httpx.TransportError, RemoteEmbeddingError) as exc:
                last_error = exc
                if attempt < self.max_retries:
                    time.sleep(self.backoff * (2 ** attempt))
        raise RemoteEmbeddingError(
            f"embedding service unreachable after {self.max_retries + 1} attempts: "
            f"{last_error}")

    def health(self) -> dict:
        response = self._request("GET", "/health")
        if response.status_code != 200:
            raise RemoteEmbeddingError(f"/health returned {response.status_code}")
        payload = response.json()
        if "model" not in payload or "dim" not in payload:
            raise ProtocolError("/health response missing model/dim")
        return payload

    def _ensure_model(self):
        if self._model is None:
            payload = self.health()
            self._model = payload["model"]
            self._dim = int(payload["dim"])

    def fit(self, X=None, y=None):
        return self

    def _cache_file(self, text: str) -> Optional[Path]:
        if not self.cache_path:
            return None
        key = hashlib.sha256(f"{self._model}\n{text}".encode("utf-8")).hexdigest()
        return Path(self.cache_path) / f"{key}.json"

    def _cache_get(self, text: str) -> Optional[list[float]]:
        path = self._cache_file(text)
        if path is None or not path.exists():
            return None
        try:
            return json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError):
            return None

    def _cache_put(self, text: str, vector: list[float]) -> None:
        path = self._cache_file(text)
        if path is None:
            return
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(f".tmp{os.getpid()}")
        tmp.write_text(json.dumps(vector), encoding="utf-8")
        os.replace(tmp, path)

    def _embed_batch(self, texts: list[str]) -> list[list[float]]:
        response = self._request("POST", "/embed",
                                 json={"model": self._model, "texts": texts})
        if response.status_code != 200:
            raise ProtocolError(f"/embed returned {response.status_code}")
        payload = response.json()
        vectors = payload.get("vectors")
        if vectors is None or len(vectors) != len(texts):
            raise ProtocolError("service returned wrong number of vectors")
        dim = int(payload.get("dim", -1))
        if self._dim is None:
            self._dim = dim
        if dim != self._dim or any(len(v) != self._dim for v in vectors):
            raise ProtocolError(
                f"embedding dimension changed mid-run ({dim} != {self._dim})")
        return vectors

    def transform(self, X: Sequence[str]) -> np.ndarray:
        texts = list(X)
        if not texts:
            return np.zeros((0, self._dim or 0), dtype=np.float64)
        self._ensure_model()
        vectors: list[Optional[list[float]]] = [self._cache_get(t) for t in texts]
        missing = [i for i, v in enumerate(vectors) if v is None]
        for lo in range(0, len(missing), self.batch_size):
            chunk = missing[lo:lo + self.batch_size]
            for i, vec in zip(chunk, self._embed_batch([texts[i] for i in chunk])):
                vectors[i] = vec
                self._cache_put(texts[i], vec)
        out = np.asarray(vectors, dtype=np.float64).reshape(len(texts), self._dim)
        return normalize_rows(out)

    def fingerprint(self) -> str:
        self._ensure_model()
        return f"service:model={self._model}:dim={self._dim}"


def make_embedder(config: ProviderConfig):
    if config.kind == "hashed":
        return HashedEmbedder(dim=config.dim)
    if config.kind == "tfidf":
        return TfidfEmbedder()
    return ServiceEmbedder(service_url=config.service_url,
                           cache_path=config.cache_path)
