"""Topic segmentation (C99) and thematic stage decoding (HMM)."""
import numpy as np
import pytest

from structsumm.embeddings import HashedEmbedder, cosine_matrix
from structsumm.segmentation import (C99Params, C99Segmenter, HmmParams,
                                     StageHmm, StageHmmModel, StatsReport,
                                     c99_boundary_trace, rank_transform,
                                     segmentation_stats, select_boundary_count)
from structsumm.synthetic import (constant_embeddings, staged_embeddings,
                                  two_cluster_document, two_topic_embeddings)
from structsumm.types import Section, StructureView, ViewMethod, flat_view
from structsumm.validation import normalize_rows


def _reference_rank(S: np.ndarray, window: int) -> np.ndarray:
    """Straight-from-definition rank transform used as an oracle."""
    n = S.shape[0]
    R = np.zeros_like(S)
    for i in range(n):
        for j in range(n):
            lower = total = 0
            for a in range(i - window, i + window + 1):
                for b in range(j - window, j + window + 1):
                    if (a, b) == (i, j) or not (0 <= a < n and 0 <= b < n):
                        continue
                    total += 1
                    if S[a, b] < S[i, j]:
                        lower += 1
            R[i, j] = lower / total if total else 0.0
    return R


def _block_density(R: np.ndarray, boundaries: list[int]) -> float:
    """Inside density for a given boundary set, computed by direct slicing."""
    edges = [0] + sorted(boundaries) + [R.shape[0]]
    mass = sum(float(R[a:b, a:b].sum()) for a, b in zip(edges, edges[1:]))
    area = sum(float((b - a) ** 2) for a, b in zip(edges, edges[1:]))
    return mass / area


# ---------------------------------------------------------------------------
# C99
# ---------------------------------------------------------------------------

def test_rank_transform_matches_reference():
    rng = np.random.default_rng(5)
    X = normalize_rows(rng.standard_normal((9, 8)))
    S = cosine_matrix(X)
    for window in (1, 2, 4):
        assert np.allclose(rank_transform(S, window),
                           _reference_rank(S, window), atol=1e-12)


def test_first_boundary_matches_single_cut_brute_force():
    X, _ = two_topic_embeddings(seed=1)
    R = rank_transform(cosine_matrix(X), window=4)
    order, _ = c99_boundary_trace(R)
    n = R.shape[0]
    best_cut = max(range(1, n), key=lambda c: (_block_density(R, [c]), -c))
    assert order[0] == best_cut


def test_two_topic_matrix_recovers_planted_boundary():
    seg = C99Segmenter()
    for seed in range(10):
        X, boundary = two_topic_embeddings(seed)
        assert seg.boundaries(X) == [boundary]


def test_vocabulary_disjoint_halves_recover_boundary():
    emb = HashedEmbedder(dim=256).fit([])
    seg = C99Segmenter()
    rng = np.random.default_rng(42)
    doc, boundary = two_cluster_document("d", rng)
    X = emb.transform(doc.sentence_texts)
    assert seg.boundaries(X) == [boundary]


def test_single_sentence_single_section():
    X = constant_embeddings(1)
    view = C99Segmenter().segment(X)
    assert len(view.sections) == 1
    assert view.method is ViewMethod.C99_TOPIC


def test_constant_similarity_single_section():
    view = C99Segmenter().segment(constant_embeddings(14))
    assert len(view.sections) == 1


def test_c99_partition_is_valid():
    X, _ = two_topic_embeddings(seed=3)
    view = C99Segmenter().segment(X)
    flattened = [i for sec in view.sections for i in sec.sentence_indices]
    assert flattened == list(range(X.shape[0]))


def test_c99_invariant_to_dimension_permutation():
    X, _ = two_topic_embeddings(seed=4)
    rng = np.random.default_rng(0)
    perm = rng.permutation(X.shape[1])
    seg = C99Segmenter()
    assert seg.boundaries(X) == seg.boundaries(X[:, perm])


def test_boundary_trace_tie_breaks_to_lowest_position():
    # all-zero rank matrix: every cut has density 0, lowest position wins
    order, gains = c99_boundary_trace(np.zeros((5, 5)))
    assert order[0] == 1
    assert select_boundary_count(gains, std_coeff=1.0) == 0


def test_c99_params_validation():
    with pytest.raises(ValueError):
        C99Params(window=0)
    with pytest.raises(ValueError):
        C99Params(min_segment=0)


def test_min_segment_respected():
    X, _ = two_topic_embeddings(seed=2)
    seg = C99Segmenter(min_segment=3)
    for b in seg.boundaries(X):
        assert b >= 3 and X.shape[0] - b >= 3


# ---------------------------------------------------------------------------
# HMM
# ---------------------------------------------------------------------------

def test_hmm_planted_stages_recovered():
    matrices, labels = staged_embeddings(n_docs=10, seed=3)
    hmm = StageHmm(n_stages=5, n_iter=30, seed=0).fit(matrices)
    correct = total = 0
    for X, lab in zip(matrices, labels):
        path = hmm.predict(X)
        correct += int((path == lab).sum())
        total += len(lab)
    assert correct / total >= 0.90


def test_hmm_loglik_nondecreasing():
    matrices, _ = staged_embeddings(n_docs=6, seed=9)
    hmm = StageHmm(n_stages=5, n_iter=25, seed=1).fit(matrices)
    ll = np.asarray(hmm.model_.log_likelihoods)
    assert len(ll) == 25
    assert np.all(np.diff(ll) >= -1e-8)


def test_hmm_decode_monotone_on_arbitrary_input():
    matrices, _ = staged_embeddings(n_docs=4, seed=2)
    hmm = StageHmm(n_stages=5, n_iter=10, seed=0).fit(matrices)
    rng = np.random.default_rng(7)
    for _ in range(50):
        T = int(rng.integers(1, 30))
        X = normalize_rows(rng.standard_normal((T, 16)))
        path = hmm.predict(X)
        assert np.all(np.diff(path) >= 0)


def test_hmm_single_doc_one_sentence_per_stage():
    rng = np.random.default_rng(0)
    X = normalize_rows(rng.standard_normal((5, 16)))
    hmm = StageHmm(n_stages=5, n_iter=50, seed=0).fit([X])
    assert list(hmm.predict(X)) == [0, 1, 2, 3, 4]


def test_hmm_fewer_sentences_than_stages():
    matrices, _ = staged_embeddings(n_docs=4, seed=2)
    hmm = StageHmm(n_stages=5, n_iter=5, seed=0).fit(matrices)
    X = matrices[0][:3]
    view = hmm.decode(X)
    assert len(view.sections) <= 3


def test_hmm_n_iter_zero_is_initialization_only():
    matrices, _ = staged_embeddings(n_docs=3, seed=5)
    hmm = StageHmm(n_stages=5, n_iter=0, seed=4).fit(matrices)
    model = hmm.model_
    assert model.log_likelihoods == []
    # initialization pools equal-length runs; stage 0 mean comes from the
    # leading chunks of the training docs
    chunks = [np.array_split(M, 5)[0] for M in matrices]
    expected = np.vstack(chunks).mean(axis=0)
    assert np.allclose(model.means[0], expected, atol=1e-12)


def test_hmm_stage_names_five():
    matrices, _ = staged_embeddings(n_docs=6, seed=3)
    hmm = StageHmm(n_stages=5, n_iter=20, seed=0).fit(matrices)
    view = hmm.decode(matrices[0])
    titles = [sec.title for sec in view.sections]
    assert titles == ["Decision Data", "Introduction", "Context",
                      "Judicial Analysis", "Conclusion"]


def test_hmm_dim_mismatch_errors():
    rng = np.random.default_rng(0)
    A = normalize_rows(rng.standard_normal((6, 16)))
    B = normalize_rows(rng.standard_normal((6, 8)))
    with pytest.raises(ValueError, match="dim"):
        StageHmm(n_stages=3, n_iter=1).fit([A, B])
    hmm = StageHmm(n_stages=3, n_iter=1).fit([A])
    with pytest.raises(ValueError, match="dim"):
        hmm.predict(B)


def test_hmm_save_load_round_trip(tmp_path):
    matrices, _ = staged_embeddings(n_docs=4, seed=6)
    hmm = StageHmm(n_stages=5, n_iter=10, seed=0).fit(matrices)
    hmm.model_.provider_fingerprint = "hashed:dim=16"
    path = tmp_path / "model.npz"
    hmm.save(path)
    loaded = StageHmmModel.load(path)
    assert np.array_equal(loaded.means, hmm.model_.means)
    assert np.array_equal(loaded.variances, hmm.model_.variances)
    assert np.array_equal(loaded.stay, hmm.model_.stay)
    assert loaded.stage_names == hmm.model_.stage_names
    assert loaded.provider_fingerprint == "hashed:dim=16"

    other = StageHmm().load(path)
    assert list(other.predict(matrices[0])) == list(hmm.predict(matrices[0]))


def test_hmm_variance_floor_applied():
    # identical rows per stage would give zero variance without the floor
    X = np.tile(np.array([[1.0] + [0.0] * 15]), (6, 1))
    hmm = StageHmm(n_stages=2, n_iter=3, variance_floor=1e-6, seed=0).fit([X])
    assert np.all(hmm.model_.variances >= 1e-6)


def test_hmm_params_validation():
    with pytest.raises(ValueError):
        HmmParams(n_stages=1)


# ---------------------------------------------------------------------------
# segmentation statistics
# ---------------------------------------------------------------------------

def _view_with_sizes(sizes):
    boundaries = []
    total = 0
    for size in sizes[:-1]:
        total += size
        boundaries.append(total)
    n = sum(sizes)
    from structsumm.types import view_from_boundaries
    return view_from_boundaries(ViewMethod.C99_TOPIC, n, boundaries)


def test_stats_hand_case():
    report = segmentation_stats([_view_with_sizes([3, 5])])
    assert report.avg_sections == 2.0
    assert report.std_sections == 0.0
    assert report.avg_sents_per_section == 4.0
    assert report.std_sents_per_section == 1.0


def test_stats_all_single_section():
    views = [flat_view(n) for n in (4, 7, 2)]
    report = segmentation_stats(views)
    assert report.avg_sections == 1.0
    assert report.std_sections == 0.0


def test_stats_csv_columns():
    report = segmentation_stats([_view_with_sizes([3, 5])])
    assert StatsReport.CSV_HEADER == ("view,avg_sections,std_sections,"
                                      "avg_sents_per_section,std_sents_per_section")
    row = report.csv_row("c99")
    assert row.startswith("c99,2.0000,0.0000,4.0000,1.0000")


def test_stats_requires_views():
    with pytest.raises(ValueError):
        segmentation_stats([])
