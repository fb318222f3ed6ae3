"""Extractive summary selection from sentence scores.

Three selectors share budget semantics (whitespace word counts; keep
picking while the running total is below the budget, so the final pick may
cross it):

* select_greedy: descending score, ties to the lower index.
* select_reweighted: greedy phase up to g*max_len words, then a penalty
  phase that subtracts mu2-weighted section-to-section similarity from the
  remaining scores after every pick, accumulating across rounds.
* lexrank: power iteration over a row-stochastic cosine graph, then greedy
  selection on the stationary scores.

Summaries are always emitted in document order.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .embeddings import section_embedding
from .graph import CentralityResult
from .types import StructureView
from .validation import as_embedding_matrix, check_alignment


class Pick(NamedTuple):
    """One selection step: global sentence index, score when picked, phase."""

    index: int
    score: float
    phase: int


@dataclass(frozen=True)
class ReweightParams:
    g: float = 0.5
    mu2: float = 1.0
    max_len: int = 220

    def __post_init__(self):
        if not 0.0 < self.g <= 1.0:
            raise ValueError("g must be in (0, 1]")
        if self.mu2 < 0.0:
            raise ValueError("mu2 must be >= 0")
        if self.max_len < 1:
            raise ValueError("max_len must be >= 1")


@dataclass(frozen=True)
class LexRankParams:
    damping: float = 0.85
    tolerance: float = 1e-6
    max_iter: int = 200
    similarity_threshold: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.damping < 1.0:
            raise ValueError("damping must be in (0, 1)")
        if self.tolerance <= 0.0:
            raise ValueError("tolerance must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")


@dataclass(frozen=True)
class SummarySelection:
    """Selected sentences in document order plus the pick-by-pick trace."""

    sentence_indices: tuple[int, ...]
    word_count: int
    selection_trace: tuple[Pick, ...]

    def __post_init__(self):
        if len(set(self.sentence_indices)) != len(self.sentence_indices):
            raise ValueError("duplicate sentence indices in selection")

    def summary_text(self, texts: Sequence[str]) -> str:
        return " ".join(texts[i] for i in self.sentence_indices)


def word_counts(texts: Sequence[str]) -> list[int]:
    return [len(t.split()) for t in texts]


def _finish(picks: list[Pick], counts: Sequence[int]) -> SummarySelection:
    indices = tuple(sorted(p.index for p in picks))
    return SummarySelection(sentence_indices=indices,
                            word_count=sum(counts[i] for i in indices),
                            selection_trace=tuple(picks))


def _greedy_picks(scores: np.ndarray, counts: Sequence[int], budget: float,
                  phase: int = 1) -> list[Pick]:
    order = sorted(range(len(scores)), key=lambda i: (-scores[i], i))
    picks: list[Pick] = []
    total = 0
    for i in order:
        if total >= budget:
            break
        picks.append(Pick(i, float(scores[i]), phase))
        total += counts[i]
    return picks


def select_greedy(result: CentralityResult, texts: Sequence[str],
                  max_len: int) -> SummarySelection:
    """Top-scored sentences until the word budget is reached."""
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    n = result.view.n_sentences
    if len(texts) != n:
        raise ValueError(f"expected {n} sentence texts, got {len(texts)}")
    counts = word_counts(texts)
    picks = _greedy_picks(result.c, counts, float(max_len))
    return _finish(picks, counts)


def select_reweighted(result: CentralityResult, view: StructureView,
                      matrix: np.ndarray, texts: Sequence[str],
                      params: ReweightParams = ReweightParams()
                      ) -> SummarySelection:
    """Two-phase selection that spends part of the budget greedily, then
    downweights sections similar to the one just drawn from."""
    X = as_embedding_matrix(matrix)
    check_alignment(X, view)
    n = view.n_sentences
    if len(texts) != n:
        raise ValueError(f"expected {n} sentence texts, got {len(texts)}")
    counts = word_counts(texts)

    picks = _greedy_picks(result.c, counts, params.g * params.max_len, phase=1)
    total = sum(counts[p.index] for p in picks)
    selected = {p.index for p in picks}
    if not picks or len(selected) == n:
        return _finish(picks, counts)

    embeds = np.vstack([section_embedding(X, sec) for sec in view.sections])
    section_sims = embeds @ embeds.T
    section_of = np.array([view.section_of(i) for i in range(n)])

    scores = result.c.astype(np.float64).copy()
    last = picks[-1].index
    while total < params.max_len and len(selected) < n:
        J = int(section_of[last])
        for i in range(n):
            if i not in selected:
                scores[i] -= section_sims[section_of[i], J] * params.mu2
        best = min((i for i in range(n) if i not in selected),
                   key=lambda i: (-scores[i], i))
        picks.append(Pick(best, float(scores[best]), 2))
        selected.add(best)
        total += counts[best]
        last = best
    return _finish(picks, counts)


@dataclass(frozen=True)
class LexRankResult:
    scores: np.ndarray
    converged: bool
    n_iter: int
    residuals: tuple[float, ...]


def _transition_matrix(X: np.ndarray, threshold: float) -> np.ndarray:
    Xu = X / np.where(np.linalg.norm(X, axis=1, keepdims=True) == 0.0, 1.0,
                      np.linalg.norm(X, axis=1, keepdims=True))
    S = np.maximum(Xu @ Xu.T, 0.0)
    if threshold > 0.0:
        S = (S > threshold).astype(np.float64)
    row_sums = S.sum(axis=1, keepdims=True)
    n = S.shape[0]
    # degree-zero nodes jump uniformly
    uniform = np.full((1, n), 1.0 / n)
    return np.where(row_sums > 0.0, S / np.where(row_sums == 0.0, 1.0, row_sums),
                    uniform)


def lexrank_scores(matrix: np.ndarray,
                   params: LexRankParams = LexRankParams()) -> LexRankResult:
    """Stationary scores of the damped similarity walk; sums to 1."""
    X = as_embedding_matrix(matrix)
    n = X.shape[0]
    P = _transition_matrix(X, params.similarity_threshold)
    p = np.full(n, 1.0 / n)
    teleport = (1.0 - params.damping) / n
    residuals: list[float] = []
    converged = False
    iterations = 0
    for iterations in range(1, params.max_iter + 1):
        p_next = params.damping * (P.T @ p) + teleport
        residual = float(np.abs(p_next - p).sum())
        residuals.append(residual)
        p = p_next
        if residual < params.tolerance:
            converged = True
            break
    return LexRankResult(scores=p, converged=converged, n_iter=iterations,
                         residuals=tuple(residuals))


def lexrank(matrix: np.ndarray, texts: Sequence[str],
            params: LexRankParams = LexRankParams(),
            max_len: int = 220) -> SummarySelection:
    """Greedy selection over LexRank stationary scores."""
    result = lexrank_scores(matrix, params)
    counts = word_counts(texts)
    picks = _greedy_picks(result.scores, counts, float(max_len))
    return _finish(picks, counts)


def summary_record(doc_id: str, selection: SummarySelection,
                   texts: Sequence[str], method: str,
                   params: Optional[dict] = None) -> dict:
    """Per-document output object for batch summary files."""
    return {
        "id": doc_id,
        "selected_indices": list(selection.sentence_indices),
        "summary_text": selection.summary_text(texts),
        "word_count": selection.word_count,
        "method": method,
        "params": dict(params or {}),
    }
