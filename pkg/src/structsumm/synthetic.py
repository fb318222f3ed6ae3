"""Deterministic synthetic fixtures for tests and the bundled demo corpus.

Generators are seeded and pure: the same seed always yields the same
documents, embeddings, and planted structure. Three families:

* two-cluster documents: a section of near-duplicate sentences followed by
  a section with disjoint vocabulary, references drawing on both; exercises
  redundancy-aware selection and topic segmentation.
* two-topic embedding matrices: raw unit vectors around two separated
  directions with a planted boundary.
* staged documents/matrices: ordered stage runs with per-stage vocabulary
  or per-stage mean vectors, for monotone stage decoding.
"""
from __future__ import annotations

import numpy as np

from .types import Document, IrcLabel, Sentence

_CLUSTER_A_BASE = ("the appellant argues the contract breach caused "
                   "substantial damages to the business operations").split()
_CLUSTER_A_POOL = ("agreement", "liability", "warranty", "negligence",
                   "compensation", "obligation", "clause", "remedy")
_CLUSTER_B_COMMON = ("tribunal", "procedure", "jurisdiction", "evidence", "motion")
_CLUSTER_B_POOL = ("filing", "affidavit", "hearing", "adjournment", "disclosure",
                   "transcript", "deponent", "objection", "ruling", "counsel",
                   "submission", "registry", "docket", "notice", "service")

_STAGE_POOLS = (
    ("citation", "docket", "registry", "panel", "coram", "heard", "filed"),
    ("overview", "appeal", "arises", "question", "presented", "begins", "outset"),
    ("background", "facts", "events", "parties", "history", "occurred", "prior"),
    ("analysis", "reasoning", "considers", "weighs", "standard", "applies", "test"),
    ("conclusion", "disposition", "orders", "dismissed", "allowed", "costs", "result"),
)

_FIXTURE_SENTENCES = (
    ("The plaintiff filed a claim for unpaid invoices.",
     "The defendant disputed the amounts owed under the agreement.",
     "The court reviewed the delivery records in detail.",
     "Judgment was entered for the plaintiff with costs."),
    ("An application for judicial review was brought promptly.",
     "The board had denied the permit without written reasons.",
     "Procedural fairness requires reasons for such denials.",
     "The matter was remitted to the board for reconsideration."),
    ("The tenant withheld rent citing serious repair failures.",
     "Inspections confirmed water damage in two units.",
     "The landlord began repairs only after the hearing notice.",
     "Rent abatement was granted for the affected months."),
    ("The insurer denied coverage relying on an exclusion clause.",
     "The clause was ambiguous about water damage origins.",
     "Ambiguity in policies is construed against the drafter.",
     "Coverage was ordered together with defence costs."),
    ("The union grieved the dismissal of a long-serving employee.",
     "The employer alleged repeated safety violations on site.",
     "The arbitrator found the penalty disproportionate.",
     "Reinstatement was ordered with back pay reduced by half."),
)


def _sentences_from_texts(texts: list[str]) -> tuple[str, list[Sentence]]:
    body_parts = []
    sentences = []
    offset = 0
    for i, text in enumerate(texts):
        if i:
            offset += 1  # joining space
        sentences.append(Sentence(index=i, text=text,
                                  char_span=(offset, offset + len(text))))
        body_parts.append(text)
        offset += len(text)
    return " ".join(body_parts), sentences


def _words_to_sentence(words: list[str]) -> str:
    return (" ".join(words)).capitalize() + "."


def two_cluster_document(doc_id: str, rng: np.random.Generator
                         ) -> tuple[Document, int]:
    """One document with a near-duplicate first section and a varied,
    vocabulary-disjoint second section; returns (document, boundary) where
    the boundary is the index of the first second-section sentence.

    Every sentence is exactly 12 words so word budgets behave predictably
    in tests (two sentences fill a 24-word budget).
    """
    m_a = int(rng.integers(5, 8))
    m_b = int(rng.integers(5, 8))

    texts: list[str] = []
    for _ in range(m_a):
        words = list(_CLUSTER_A_BASE)
        # perturb one non-leading word to keep sentences near-duplicate
        slot = int(rng.integers(2, len(words)))
        words[slot] = str(rng.choice(_CLUSTER_A_POOL))
        texts.append(_words_to_sentence(words))
    for _ in range(m_b):
        extra = [str(w) for w in rng.choice(_CLUSTER_B_POOL, size=7, replace=False)]
        texts.append(_words_to_sentence(list(_CLUSTER_B_COMMON) + extra))

    reference_texts = [
        _words_to_sentence(list(_CLUSTER_A_BASE[:8])),
        _words_to_sentence(list(_CLUSTER_B_COMMON) + ["review"]),
    ]
    ref_sentences = [Sentence(index=i, text=t, char_span=(0, len(t)))
                     for i, t in enumerate(reference_texts)]

    labels = [IrcLabel.NON_IRC] * (m_a + m_b)
    labels[0] = IrcLabel.ISSUE
    labels[m_a] = IrcLabel.REASON
    labels[-1] = IrcLabel.CONCLUSION
    summary_labels = [IrcLabel.ISSUE, IrcLabel.CONCLUSION]

    body, sentences = _sentences_from_texts(texts)
    doc = Document(id=doc_id, body_text=body, sentences=sentences,
                   reference_summary=ref_sentences,
                   source_irc_labels=labels,
                   summary_irc_labels=summary_labels)
    return doc, m_a


def two_cluster_corpus(n_docs: int = 50, seed: int = 7
                       ) -> tuple[list[Document], list[int]]:
    """Fixture corpus of two-cluster documents with planted boundaries."""
    rng = np.random.default_rng(seed)
    docs, boundaries = [], []
    for k in range(n_docs):
        doc, boundary = two_cluster_document(f"twocluster-{k:03d}", rng)
        docs.append(doc)
        boundaries.append(boundary)
    return docs, boundaries


def two_topic_embeddings(seed: int, dim: int = 16,
                         noise: float = 0.2) -> tuple[np.ndarray, int]:
    """Unit vectors around two orthogonal directions; returns (matrix,
    planted boundary)."""
    rng = np.random.default_rng(seed)
    basis, _ = np.linalg.qr(rng.standard_normal((dim, 2)))
    n1 = int(rng.integers(5, 11))
    n2 = int(rng.integers(5, 11))
    rows = []
    for count, direction in ((n1, basis[:, 0]), (n2, basis[:, 1])):
        for _ in range(count):
            v = direction + noise * rng.standard_normal(dim)
            rows.append(v / np.linalg.norm(v))
    return np.vstack(rows), n1


def constant_embeddings(n: int, dim: int = 16) -> np.ndarray:
    """All rows identical: a degenerate document with constant similarity."""
    v = np.zeros(dim)
    v[0] = 1.0
    return np.tile(v, (n, 1))


def staged_embeddings(n_docs: int, seed: int, n_stages: int = 5,
                      dim: int = 16, noise: float = 0.25
                      ) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Embedding matrices with ordered stage runs; returns (matrices,
    per-sentence stage labels). Stage means are shared across documents."""
    if dim < n_stages:
        raise ValueError("dim must be >= n_stages")
    rng = np.random.default_rng(seed)
    means, _ = np.linalg.qr(rng.standard_normal((dim, n_stages)))
    matrices, labels = [], []
    for _ in range(n_docs):
        rows, stage_ids = [], []
        for k in range(n_stages):
            run = int(rng.integers(3, 7))
            for _ in range(run):
                v = means[:, k] + noise * rng.standard_normal(dim)
                rows.append(v / np.linalg.norm(v))
                stage_ids.append(k)
        matrices.append(np.vstack(rows))
        labels.append(np.asarray(stage_ids, dtype=np.int64))
    return matrices, labels


def staged_document(doc_id: str, rng: np.random.Generator,
                    n_stages: int = 5) -> tuple[Document, np.ndarray]:
    """Text document whose sentences walk through disjoint stage
    vocabularies; returns (document, per-sentence stage labels)."""
    texts, stage_ids = [], []
    for k in range(n_stages):
        pool = _STAGE_POOLS[k % len(_STAGE_POOLS)]
        run = int(rng.integers(3, 6))
        for _ in range(run):
            words = [str(w) for w in rng.choice(pool, size=6, replace=True)]
            texts.append(_words_to_sentence(words))
            stage_ids.append(k)
    body, sentences = _sentences_from_texts(texts)
    doc = Document(id=doc_id, body_text=body, sentences=sentences)
    return doc, np.asarray(stage_ids, dtype=np.int64)


def staged_corpus(n_docs: int = 20, seed: int = 11, n_stages: int = 5
                  ) -> tuple[list[Document], list[np.ndarray]]:
    rng = np.random.default_rng(seed)
    docs, labels = [], []
    for k in range(n_docs):
        doc, stage_ids = staged_document(f"staged-{k:03d}", rng, n_stages)
        docs.append(doc)
        labels.append(stage_ids)
    return docs, labels


def demo_corpus() -> list[Document]:
    """Five tiny hand-written documents for end-to-end smoke tests."""
    docs = []
    for k, texts in enumerate(_FIXTURE_SENTENCES):
        body, sentences = _sentences_from_texts(list(texts))
        ref_text = texts[-1]
        docs.append(Document(
            id=f"demo-{k}", body_text=body, sentences=sentences,
            reference_summary=[Sentence(index=0, text=ref_text,
                                        char_span=(0, len(ref_text)))]))
    return docs
