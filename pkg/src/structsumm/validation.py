"""Input validation helpers shared by the estimators."""
from __future__ import annotations

import numpy as np

from .types import StructureView

UNIT_NORM_ATOL = 1e-6


def as_embedding_matrix(X, n_rows: int | None = None) -> np.ndarray:
    """Validate and return an (n, dim) float64 matrix of unit-norm or zero rows."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"embedding matrix must be 2-D, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("embedding matrix contains non-finite values")
    if n_rows is not None and X.shape[0] != n_rows:
        raise ValueError(f"expected {n_rows} embedding rows, got {X.shape[0]}")
    norms = np.linalg.norm(X, axis=1)
    bad = ~(np.isclose(norms, 1.0, atol=UNIT_NORM_ATOL) | (norms == 0.0))
    if np.any(bad):
        raise ValueError(
            f"{int(bad.sum())} embedding rows are neither unit-norm nor zero")
    return X


def check_alignment(X: np.ndarray, view: StructureView) -> None:
    if X.shape[0] != view.n_sentences:
        raise ValueError(
            f"embedding matrix has {X.shape[0]} rows but view covers "
            f"{view.n_sentences} sentences")


def normalize_rows(X: np.ndarray) -> np.ndarray:
    """L2-normalize rows in place-safe fashion; zero rows stay zero."""
    X = np.asarray(X, dtype=np.float64)
    norms = np.linalg.norm(X, axis=1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(norms > 0, X / norms, 0.0)
    return out
