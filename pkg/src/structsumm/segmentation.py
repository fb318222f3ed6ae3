"""Topic and thematic-stage segmentation.

Two segmenters produce structure views from sentence embeddings:

* C99Segmenter: domain-independent linear topic segmentation. A local rank
  transform of the cosine matrix feeds divisive clustering that maximizes
  inside density; the number of boundaries comes from a mean + c*std rule
  over per-step density gains.
* StageHmm: left-to-right Gaussian HMM over sentence vectors. Transitions
  are banded (self-loop or advance by one), the chain starts in stage 0, so
  decoded stage sequences are monotonically non-decreasing.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.special import logsumexp
from sklearn.base import BaseEstimator

from .embeddings import cosine_matrix
from .types import StructureView, ViewMethod, view_from_boundaries
from .validation import as_embedding_matrix

STAGE_NAMES_5 = ("Decision Data", "Introduction", "Context",
                 "Judicial Analysis", "Conclusion")

_LOG_EPS = -1e30


@dataclass(frozen=True)
class C99Params:
    window: int = 4
    std_coeff: float = 1.0
    min_segment: int = 1

    def __post_init__(self):
        if self.window < 1:
            raise ValueError("window must be >= 1")
        if self.min_segment < 1:
            raise ValueError("min_segment must be >= 1")


@dataclass(frozen=True)
class HmmParams:
    n_stages: int = 5
    n_iter: int = 50
    variance_floor: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        if self.n_stages < 2:
            raise ValueError("n_stages must be >= 2")


def rank_transform(S: np.ndarray, window: int) -> np.ndarray:
    """Local rank matrix: R[i, j] is the fraction of in-bounds neighbors in
    the (2*window+1)^2 mask around (i, j), excluding the center, whose
    similarity is strictly lower than S[i, j]."""
    n = S.shape[0]
    R = np.zeros_like(S, dtype=np.float64)
    for i in range(n):
        lo_i, hi_i = max(0, i - window), min(n, i + window + 1)
        for j in range(n):
            lo_j, hi_j = max(0, j - window), min(n, j + window + 1)
            block = S[lo_i:hi_i, lo_j:hi_j]
            total = block.size - 1
            if total <= 0:
                continue
            lower = int(np.count_nonzero(block < S[i, j]))
            R[i, j] = lower / total
    return R


def _block_sums(R: np.ndarray) -> np.ndarray:
    """Prefix-sum table; _query reads rectangle sums in O(1)."""
    n = R.shape[0]
    P = np.zeros((n + 1, n + 1), dtype=np.float64)
    P[1:, 1:] = R.cumsum(axis=0).cumsum(axis=1)
    return P


def _query(P: np.ndarray, a: int, b: int) -> float:
    """Sum of R over the square block [a, b) x [a, b)."""
    return float(P[b, b] - P[a, b] - P[b, a] + P[a, a])


def c99_boundary_trace(R: np.ndarray, min_segment: int = 1
                       ) -> tuple[list[int], list[float]]:
    """Greedy divisive clustering over the rank matrix.

    Returns the boundary positions in insertion order together with the
    density gain of each step. Each step inserts the single boundary that
    maximizes inside density D = sum(block rank mass) / sum(block areas).
    """
    n = R.shape[0]
    P = _block_sums(R)
    segments = [(0, n)]
    order: list[int] = []
    gains: list[float] = []

    mass = _query(P, 0, n)
    area = float(n * n)
    density = mass / area

    while True:
        best = None
        for a, b in sorted(segments):
            seg_mass = _query(P, a, b)
            seg_area = float((b - a) ** 2)
            for cut in range(a + min_segment, b - min_segment + 1):
                new_mass = mass - seg_mass + _query(P, a, cut) + _query(P, cut, b)
                new_area = (area - seg_area
                            + float((cut - a) ** 2) + float((b - cut) ** 2))
                cand = new_mass / new_area
                if best is None or cand > best[0] + 1e-15:
                    best = (cand, cut, (a, b))
        if best is None:
            break
        new_density, cut, (a, b) = best
        gains.append(new_density - density)
        density = new_density
        mass = mass - _query(P, a, b) + _query(P, a, cut) + _query(P, cut, b)
        area = area - float((b - a) ** 2) + float((cut - a) ** 2) + float((b - cut) ** 2)
        segments.remove((a, b))
        segments.extend([(a, cut), (cut, b)])
        order.append(cut)
    return order, gains


def select_boundary_count(gains: Sequence[float], std_coeff: float) -> int:
    """Number of boundaries kept: steps whose gain strictly exceeds
    mean(gains) + std_coeff * population std(gains)."""
    if not gains:
        return 0
    arr = np.asarray(gains, dtype=np.float64)
    threshold = arr.mean() + std_coeff * arr.std()
    return int(np.count_nonzero(arr > threshold))


class C99Segmenter(BaseEstimator):
    """Linear topic segmentation of one document's sentence embeddings."""

    def __init__(self, window: int = 4, std_coeff: float = 1.0, min_segment: int = 1):
        self.window = window
        self.std_coeff = std_coeff
        self.min_segment = min_segment

    @property
    def params(self) -> C99Params:
        return C99Params(self.window, self.std_coeff, self.min_segment)

    def fit(self, X=None, y=None):
        self.params  # validates
        return self

    def boundaries(self, X: np.ndarray) -> list[int]:
        """Interior boundary positions (a boundary at k starts a new segment
        at sentence k), sorted ascending."""
        params = self.params
        X = as_embedding_matrix(X)
        n = X.shape[0]
        if n <= 1:
            return []
        R = rank_transform(cosine_matrix(X), params.window)
        order, gains = c99_boundary_trace(R, params.min_segment)
        keep = select_boundary_count(gains, params.std_coeff)
        return sorted(order[:keep])

    def predict(self, X: np.ndarray) -> np.ndarray:
        """Per-sentence segment ids."""
        X = as_embedding_matrix(X)
        labels = np.zeros(X.shape[0], dtype=np.int64)
        for b in self.boundaries(X):
            labels[b:] += 1
        return labels

    def segment(self, X: np.ndarray, header_removed: bool = False) -> StructureView:
        X = as_embedding_matrix(X)
        return view_from_boundaries(ViewMethod.C99_TOPIC, X.shape[0],
                                    self.boundaries(X),
                                    header_removed=header_removed)


# ---------------------------------------------------------------------------
# Left-to-right Gaussian HMM
# ---------------------------------------------------------------------------

def _log_gaussian(X: np.ndarray, means: np.ndarray, variances: np.ndarray) -> np.ndarray:
    """(T, K) log densities of diagonal Gaussians."""
    T, _ = X.shape
    K = means.shape[0]
    out = np.empty((T, K), dtype=np.float64)
    for k in range(K):
        diff = X - means[k]
        out[:, k] = -0.5 * (np.log(2.0 * np.pi * variances[k]).sum()
                            + (diff * diff / variances[k]).sum(axis=1))
    return out


@dataclass
class StageHmmModel:
    """Fitted parameters: means/variances per stage plus banded transitions."""

    means: np.ndarray
    variances: np.ndarray
    stay: np.ndarray      # P(stage k -> k); advance prob is 1 - stay[k]
    stage_names: tuple[str, ...] = ()
    provider_fingerprint: str = ""
    log_likelihoods: list[float] = field(default_factory=list)

    @property
    def n_stages(self) -> int:
        return self.means.shape[0]

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    def save(self, path) -> None:
        meta = {"stage_names": list(self.stage_names),
                "provider_fingerprint": self.provider_fingerprint,
                "log_likelihoods": self.log_likelihoods}
        np.savez(path, means=self.means, variances=self.variances,
                 stay=self.stay, meta=json.dumps(meta))

    @classmethod
    def load(cls, path) -> "StageHmmModel":
        data = np.load(path, allow_pickle=False)
        meta = json.loads(str(data["meta"]))
        return cls(means=data["means"], variances=data["variances"],
                   stay=data["stay"],
                   stage_names=tuple(meta["stage_names"]),
                   provider_fingerprint=meta["provider_fingerprint"],
                   log_likelihoods=list(meta["log_likelihoods"]))


class StageHmm(BaseEstimator):
    """Banded-transition Gaussian HMM for thematic stage decoding.

    Training is Baum-Welch restricted to the band (self-loop and advance
    transitions only, start fixed at stage 0); decoding is Viterbi. With 5
    stages the sections carry the fixed legal-decision stage names.
    """

    def __init__(self, n_stages: int = 5, n_iter: int = 50,
                 variance_floor: float = 1e-6, seed: int = 0):
        self.n_stages = n_stages
        self.n_iter = n_iter
        self.variance_floor = variance_floor
        self.seed = seed
        self.model_: Optional[StageHmmModel] = None

    @property
    def params(self) -> HmmParams:
        return HmmParams(self.n_stages, self.n_iter, self.variance_floor, self.seed)

    def _stage_names(self) -> tuple[str, ...]:
        if self.n_stages == 5:
            return STAGE_NAMES_5
        return tuple(f"Stage {k}" for k in range(self.n_stages))

    def _initialize(self, matrices: list[np.ndarray]) -> StageHmmModel:
        K = self.n_stages
        dim = matrices[0].shape[1]
        rng = np.random.default_rng(self.seed)
        pools: list[list[np.ndarray]] = [[] for _ in range(K)]
        for X in matrices:
            for k, chunk in enumerate(np.array_split(X, K)):
                if chunk.size:
                    pools[k].append(chunk)

        stacked_all = np.vstack(matrices)
        global_mean = stacked_all.mean(axis=0)
        global_var = np.maximum(stacked_all.var(axis=0), self.variance_floor)

        means = np.empty((K, dim))
        variances = np.empty((K, dim))
        for k in range(K):
            if pools[k]:
                stage = np.vstack(pools[k])
                means[k] = stage.mean(axis=0)
                variances[k] = np.maximum(stage.var(axis=0), self.variance_floor)
            else:
                # stage never populated at init: seed from global statistics
                means[k] = global_mean + 1e-3 * rng.standard_normal(dim)
                variances[k] = global_var
        stay = np.full(K, 0.5)
        stay[-1] = 1.0
        return StageHmmModel(means=means, variances=variances, stay=stay,
                             stage_names=self._stage_names(),
                             log_likelihoods=[])

    def _log_transitions(self, model: StageHmmModel) -> tuple[np.ndarray, np.ndarray]:
        stay = np.clip(model.stay, 1e-12, 1.0)
        advance = np.clip(1.0 - stay, 1e-12, 1.0)
        advance[-1] = 0.0
        log_adv = np.full_like(advance, _LOG_EPS)
        np.log(advance, out=log_adv, where=advance > 0)
        return np.log(stay), log_adv

    def _forward_backward(self, model: StageHmmModel, X: np.ndarray):
        K = model.n_stages
        T = X.shape[0]
        logB = _log_gaussian(X, model.means, model.variances)
        log_stay, log_adv = self._log_transitions(model)

        alpha = np.full((T, K), _LOG_EPS)
        alpha[0, 0] = logB[0, 0]
        for t in range(1, T):
            stayed = alpha[t - 1] + log_stay
            advanced = np.full(K, _LOG_EPS)
            advanced[1:] = alpha[t - 1, :-1] + log_adv[:-1]
            alpha[t] = logB[t] + np.logaddexp(stayed, advanced)

        beta = np.full((T, K), 0.0)
        for t in range(T - 2, -1, -1):
            stayed = log_stay + logB[t + 1] + beta[t + 1]
            advanced = np.full(K, _LOG_EPS)
            advanced[:-1] = log_adv[:-1] + logB[t + 1, 1:] + beta[t + 1, 1:]
            beta[t] = np.logaddexp(stayed, advanced)

        loglik = float(logsumexp(alpha[-1]))
        gamma = alpha + beta - loglik
        return logB, alpha, beta, gamma, loglik

    def fit(self, X: Sequence[np.ndarray], y=None):
        """Estimate parameters from a list of per-document embedding matrices."""
        matrices = [as_embedding_matrix(M) for M in X]
        if not matrices:
            raise ValueError("need at least one training document")
        dims = {M.shape[1] for M in matrices}
        if len(dims) != 1:
            raise ValueError(f"training matrices disagree on dim: {sorted(dims)}")

        model = self._initialize(matrices)
        K = self.n_stages

        for _ in range(self.n_iter):
            total_loglik = 0.0
            gamma_sum = np.zeros(K)
            mean_acc = np.zeros_like(model.means)
            sq_acc = np.zeros_like(model.variances)
            stay_acc = np.zeros(K)
            adv_acc = np.zeros(K)
            log_stay, log_adv = self._log_transitions(model)

            for M in matrices:
                logB, alpha, beta, gamma, loglik = self._forward_backward(model, M)
                total_loglik += loglik
                g = np.exp(gamma)
                gamma_sum += g.sum(axis=0)
                mean_acc += g.T @ M
                sq_acc += g.T @ (M * M)
                for t in range(M.shape[0] - 1):
                    xi_stay = np.exp(alpha[t] + log_stay + logB[t + 1]
                                     + beta[t + 1] - loglik)
                    xi_adv = np.exp(alpha[t, :-1] + log_adv[:-1]
                                    + logB[t + 1, 1:] + beta[t + 1, 1:] - loglik)
                    stay_acc += xi_stay
                    adv_acc[:-1] += xi_adv

            model.log_likelihoods.append(total_loglik)

            occupied = gamma_sum > 1e-12
            new_means = model.means.copy()
            new_vars = model.variances.copy()
            for k in range(K):
                if occupied[k]:
                    new_means[k] = mean_acc[k] / gamma_sum[k]
                    second = sq_acc[k] / gamma_sum[k] - new_means[k] ** 2
                    new_vars[k] = np.maximum(second, self.variance_floor)
            new_stay = model.stay.copy()
            for k in range(K - 1):
                mass = stay_acc[k] + adv_acc[k]
                if mass > 1e-12:
                    new_stay[k] = stay_acc[k] / mass
            new_stay[-1] = 1.0
            model = StageHmmModel(means=new_means, variances=new_vars,
                                  stay=new_stay, stage_names=model.stage_names,
                                  log_likelihoods=model.log_likelihoods)

        self.model_ = model
        return self

    def _require_model(self) -> StageHmmModel:
        if self.model_ is None:
            raise RuntimeError("StageHmm has no model; call fit or load one")
        return self.model_

    def predict(self, X: np.ndarray) -> np.ndarray:
        """Viterbi stage index per sentence; non-decreasing by construction."""
        model = self._require_model()
        X = as_embedding_matrix(X)
        if X.shape[1] != model.dim:
            raise ValueError(
                f"matrix dim {X.shape[1]} does not match model dim {model.dim}")
        K = model.n_stages
        T = X.shape[0]
        logB = _log_gaussian(X, model.means, model.variances)
        log_stay, log_adv = self._log_transitions(model)

        delta = np.full((T, K), _LOG_EPS)
        delta[0, 0] = logB[0, 0]
        back = np.zeros((T, K), dtype=np.int64)
        for t in range(1, T):
            stayed = delta[t - 1] + log_stay
            advanced = np.full(K, _LOG_EPS)
            advanced[1:] = delta[t - 1, :-1] + log_adv[:-1]
            take_advance = advanced > stayed
            delta[t] = logB[t] + np.where(take_advance, advanced, stayed)
            back[t] = np.where(take_advance, np.arange(K) - 1, np.arange(K))

        path = np.empty(T, dtype=np.int64)
        path[-1] = int(np.argmax(delta[-1]))
        for t in range(T - 2, -1, -1):
            path[t] = back[t + 1, path[t + 1]]
        return path

    def decode(self, X: np.ndarray, header_removed: bool = False) -> StructureView:
        """Structure view whose sections are maximal equal-stage runs."""
        model = self._require_model()
        path = self.predict(X)
        boundaries = [t for t in range(1, len(path)) if path[t] != path[t - 1]]
        names = model.stage_names or self._stage_names()
        starts = [0] + boundaries
        titles = [names[path[s]] if path[s] < len(names) else None for s in starts]
        return view_from_boundaries(ViewMethod.HMM_STAGE, len(path), boundaries,
                                    titles=titles, header_removed=header_removed)

    def save(self, path) -> None:
        self._require_model().save(path)

    def load(self, path) -> "StageHmm":
        self.model_ = StageHmmModel.load(path)
        self.n_stages = self.model_.n_stages
        return self


# ---------------------------------------------------------------------------
# Segmentation statistics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StatsReport:
    """Table-style section statistics over a batch of structure views."""

    n_documents: int
    avg_sections: float
    std_sections: float
    avg_sents_per_section: float
    std_sents_per_section: float

    CSV_HEADER = ("view,avg_sections,std_sections,"
                  "avg_sents_per_section,std_sents_per_section")

    def csv_row(self, view_name: str) -> str:
        return (f"{view_name},{self.avg_sections:.4f},{self.std_sections:.4f},"
                f"{self.avg_sents_per_section:.4f},{self.std_sents_per_section:.4f}")


def segmentation_stats(views: Sequence[StructureView]) -> StatsReport:
    """Mean/population-std of sections per document and sentences per section
    (section sizes pooled over all documents)."""
    if not views:
        raise ValueError("need at least one view")
    per_doc = np.array([len(v.sections) for v in views], dtype=np.float64)
    sizes = np.array([len(sec) for v in views for sec in v.sections],
                     dtype=np.float64)
    return StatsReport(
        n_documents=len(views),
        avg_sections=float(per_doc.mean()),
        std_sections=float(per_doc.std()),
        avg_sents_per_section=float(sizes.mean()),
        std_sents_per_section=float(sizes.std()),
    )
