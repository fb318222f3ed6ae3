"""Embedding microservice.

Serves sentence vectors over the wire protocol the summarization client
speaks: ``POST /embed`` with ``{"model", "texts"}`` returns ``{"model",
"dim", "vectors"}``; ``GET /health`` reports ``{"status", "model", "dim"}``
once the model is loaded and 503 before that. Vectors are L2-normalized
server-side so every consumer sees the same cosine scale.

Two backends:
  * any ``hashed-<dim>`` model name — deterministic, dependency-free
    vectors derived from a per-text digest (for tests and offline runs)
  * anything else is treated as a sentence-transformers checkpoint name
"""
from __future__ import annotations

import argparse
import hashlib
import os
import re
import threading
from contextlib import asynccontextmanager
from dataclasses import dataclass
from typing import Optional, Protocol

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

DEFAULT_MODEL = "bert-base-nli-stsb-mean-tokens"
DEFAULT_PORT = 8021
DEFAULT_MAX_BATCH = 128

_HASHED_NAME = re.compile(r"^hashed-(\d+)$")


@dataclass(frozen=True)
class ServiceConfig:
    model: str = DEFAULT_MODEL
    port: int = DEFAULT_PORT
    max_batch: int = DEFAULT_MAX_BATCH
    device: Optional[str] = None

    def __post_init__(self):
        if self.max_batch < 1:
            raise ValueError("max_batch must be at least 1")
        if not 0 < self.port < 65536:
            raise ValueError("port out of range")


class Backend(Protocol):
    dim: int

    def encode(self, texts: list[str]) -> np.ndarray: ...


def _normalize(rows: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(rows, axis=1, keepdims=True)
    return rows / np.where(norms == 0.0, 1.0, norms)


class HashedBackend:
    """Unit vectors seeded from a per-text digest; stable across processes."""

    def __init__(self, dim: int):
        if dim < 8:
            raise ValueError("hashed backend needs dim >= 8")
        self.dim = dim

    def encode(self, texts: list[str]) -> np.ndarray:
        rows = np.empty((len(texts), self.dim), dtype=np.float64)
        for i, text in enumerate(texts):
            digest = hashlib.sha256(text.encode("utf-8")).digest()
            seed = int.from_bytes(digest[:8], "big")
            rows[i] = np.random.default_rng(seed).standard_normal(self.dim)
        return _normalize(rows)


class TransformerBackend:
    def __init__(self, model_name: str, device: Optional[str]):
        from sentence_transformers import SentenceTransformer

        self._model = SentenceTransformer(model_name, device=device)
        self._model.eval()
        self.dim = int(self._model.get_sentence_embedding_dimension())

    def encode(self, texts: list[str]) -> np.ndarray:
        rows = self._model.encode(texts, convert_to_numpy=True,
                                  show_progress_bar=False)
        return _normalize(np.asarray(rows, dtype=np.float64))


def load_backend(config: ServiceConfig) -> Backend:
    match = _HASHED_NAME.match(config.model)
    if match:
        return HashedBackend(dim=int(match.group(1)))
    return TransformerBackend(config.model, config.device)


class EmbedRequest(BaseModel):
    model: str
    texts: list[str] = Field(min_length=1)


def create_app(config: ServiceConfig, defer_load: bool = False) -> FastAPI:
    lock = threading.Lock()

    def load() -> None:
        with lock:
            if app.state.backend is not None:
                return
            try:
                app.state.backend = load_backend(config)
                app.state.load_error = None
            except Exception as exc:  # surfaced via /health, not a crash
                app.state.load_error = f"{type(exc).__name__}: {exc}"

    @asynccontextmanager
    async def lifespan(_: FastAPI):
        if not defer_load:
            load()
        yield

    app = FastAPI(title="embed-service", lifespan=lifespan)
    app.state.config = config
    app.state.backend = None
    app.state.load_error = None
    app.state.load = load

    @app.get("/health")
    def health():
        backend = app.state.backend
        if backend is None:
            detail = app.state.load_error or "model not loaded yet"
            return JSONResponse(status_code=503,
                                content={"status": "unavailable",
                                         "detail": detail})
        return {"status": "ok", "model": config.model, "dim": backend.dim}

    @app.post("/embed")
    def embed(request: EmbedRequest):
        backend = app.state.backend
        if backend is None:
            raise HTTPException(status_code=503, detail="model not loaded")
        if request.model != config.model:
            raise HTTPException(
                status_code=400,
                detail=f"service hosts {config.model!r}, not {request.model!r}")
        if len(request.texts) > config.max_batch:
            raise HTTPException(
                status_code=413,
                detail=f"batch of {len(request.texts)} exceeds max batch "
                       f"{config.max_batch}")
        vectors = backend.encode(request.texts)
        return {"model": config.model, "dim": backend.dim,
                "vectors": vectors.tolist()}

    return app


def config_from_env_and_args(argv: Optional[list[str]] = None) -> tuple[ServiceConfig, str]:
    parser = argparse.ArgumentParser(
        prog="embed-service",
        description="serve sentence embeddings over HTTP")
    parser.add_argument("--model", default=os.environ.get("MODEL", DEFAULT_MODEL))
    parser.add_argument("--port", type=int,
                        default=int(os.environ.get("PORT", DEFAULT_PORT)))
    parser.add_argument("--max-batch", type=int,
                        default=int(os.environ.get("EMBED_MAX_BATCH",
                                                   DEFAULT_MAX_BATCH)))
    parser.add_argument("--device",
                        default=os.environ.get("EMBED_DEVICE") or None)
    parser.add_argument("--host", default=os.environ.get("HOST", "127.0.0.1"))
    args = parser.parse_args(argv)
    return (ServiceConfig(model=args.model, port=args.port,
                          max_batch=args.max_batch, device=args.device),
            args.host)


def main(argv: Optional[list[str]] = None) -> int:
    import uvicorn

    config, host = config_from_env_and_args(argv)
    app = create_app(config)
    uvicorn.run(app, host=host, port=config.port, log_level="warning")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
