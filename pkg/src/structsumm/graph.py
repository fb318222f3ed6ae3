"""Directed-graph sentence centrality over a document structure view.

Importance of sentence i in section I is

    c[i] = mu1 * c_inter[i] + c_intra[i]

where c_intra averages boundary-weighted similarities to section peers and
c_inter averages boundary-weighted similarities to the other sections'
embeddings. Edges are asymmetric: the node nearer (or equally near) a
boundary receives the lambda2-weighted edge, the farther one lambda1. With
the default lambda1=0 this zeroes incoming weight for interior nodes.
Cosines are used raw, without clamping.
"""
from __future__ import annotations

import io
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
from sklearn.base import BaseEstimator

from .embeddings import section_embedding
from .types import Section, StructureView
from .validation import as_embedding_matrix, check_alignment


@dataclass(frozen=True)
class HipoRankParams:
    mu1: float = 0.5
    lambda1: float = 0.0
    lambda2: float = 1.0
    alpha: float = 1.0


@dataclass(frozen=True)
class CentralityResult:
    c: np.ndarray
    c_intra: np.ndarray
    c_inter: np.ndarray
    params: HipoRankParams
    view: StructureView

    def __post_init__(self):
        n = self.view.n_sentences
        for name in ("c", "c_intra", "c_inter"):
            arr = getattr(self, name)
            if arr.shape != (n,):
                raise ValueError(f"{name} must have shape ({n},), got {arr.shape}")


def boundary_distance(pos: int, n: int, alpha: float) -> float:
    """Distance of a 1-based position from the nearer boundary of a run of
    n items; alpha scales the distance to the end boundary."""
    if not 1 <= pos <= n:
        raise ValueError(f"pos must be in [1, {n}], got {pos}")
    return min(float(pos), alpha * float(n - pos + 1))


def _unit_rows(X: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(X, axis=1, keepdims=True)
    safe = np.where(norms == 0.0, 1.0, norms)
    return X / safe


def intra_centrality(X: np.ndarray,
                     section: Union[Section, Sequence[int]],
                     params: HipoRankParams = HipoRankParams()) -> np.ndarray:
    """Within-section scores, aligned to the section's sentence order.

    For a section of size m >= 2, score i is the mean over peers j of
    lambda2*cos(v_i, v_j) when d_b(i) <= d_b(j), else lambda1*cos(v_i, v_j),
    with positions 1-based inside the section. Single-sentence sections
    score 0.
    """
    X = as_embedding_matrix(X)
    indices = list(section.sentence_indices) if isinstance(section, Section) else list(section)
    if not indices:
        raise ValueError("section must be non-empty")
    m = len(indices)
    if m == 1:
        return np.zeros(1)

    V = _unit_rows(X[indices])
    sims = V @ V.T
    d = np.array([boundary_distance(p, m, params.alpha) for p in range(1, m + 1)])
    # receiver i gets lambda2 weight when at least as near a boundary as j
    weights = np.where(d[:, None] <= d[None, :], params.lambda2, params.lambda1)
    np.fill_diagonal(weights, 0.0)
    contrib = weights * sims
    np.fill_diagonal(contrib, 0.0)
    return contrib.sum(axis=1) / (m - 1)


def inter_centrality(X: np.ndarray, view: StructureView,
                     params: HipoRankParams = HipoRankParams()) -> np.ndarray:
    """Global scores from sentence-to-section edges, one value per sentence.

    Sentence i in section I averages, over the other sections J, the cosine
    to J's embedding weighted lambda2 when d_b(I) <= d_b(J) else lambda1,
    positions 1-based over sections. One-section documents score 0.
    """
    X = as_embedding_matrix(X)
    check_alignment(X, view)
    n = X.shape[0]
    M = len(view.sections)
    if M == 1:
        return np.zeros(n)

    embeds = np.vstack([section_embedding(X, sec) for sec in view.sections])
    d = np.array([boundary_distance(p, M, params.alpha) for p in range(1, M + 1)])
    Xu = _unit_rows(X)

    out = np.zeros(n)
    for I, sec in enumerate(view.sections):
        weights = np.where(d[I] <= d, params.lambda2, params.lambda1)
        weights[I] = 0.0
        sims = Xu[list(sec.sentence_indices)] @ embeds.T
        out[list(sec.sentence_indices)] = (sims * weights).sum(axis=1) / (M - 1)
    return out


def centrality(X: np.ndarray, view: StructureView,
               params: HipoRankParams = HipoRankParams()) -> CentralityResult:
    """Combined per-sentence scores aligned to global sentence index."""
    X = as_embedding_matrix(X)
    check_alignment(X, view)
    c_intra = np.zeros(X.shape[0])
    for sec in view.sections:
        c_intra[list(sec.sentence_indices)] = intra_centrality(X, sec, params)
    c_inter = inter_centrality(X, view, params)
    c = params.mu1 * c_inter + c_intra
    return CentralityResult(c=c, c_intra=c_intra, c_inter=c_inter,
                            params=params, view=view)


class CentralityScorer(BaseEstimator):
    """Parameter-holding wrapper around centrality computation."""

    def __init__(self, mu1: float = 0.5, lambda1: float = 0.0,
                 lambda2: float = 1.0, alpha: float = 1.0):
        self.mu1 = mu1
        self.lambda1 = lambda1
        self.lambda2 = lambda2
        self.alpha = alpha

    @property
    def params(self) -> HipoRankParams:
        return HipoRankParams(self.mu1, self.lambda1, self.lambda2, self.alpha)

    def fit(self, X=None, y=None):
        return self

    def score_document(self, X: np.ndarray, view: StructureView) -> CentralityResult:
        return centrality(X, view, self.params)


def centrality_to_csv(result: CentralityResult) -> str:
    """CSV dump with one row per sentence, for positional analysis."""
    buf = io.StringIO()
    buf.write("sentence_index,section_index,c,c_intra,c_inter\n")
    for i in range(result.view.n_sentences):
        sec = result.view.section_of(i)
        buf.write(f"{i},{sec},{result.c[i]:.12g},"
                  f"{result.c_intra[i]:.12g},{result.c_inter[i]:.12g}\n")
    return buf.getvalue()
