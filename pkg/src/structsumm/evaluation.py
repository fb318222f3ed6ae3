"""Summary quality metrics and oracle selectors.

ROUGE here is deliberately minimal and bit-reproducible: tokens are
lowercased alphanumeric runs, ROUGE-N uses clipped n-gram counts, ROUGE-L
uses the longest common subsequence over whole token sequences (no
stemming, no stopword removal). IRC coverage follows the source/target
split: source coverage is exact index containment of labeled sentences,
target coverage matches generated sentences to reference sentences by a
ROUGE-L F1 threshold.
"""
from __future__ import annotations

import io
import re
from collections import Counter
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import MissingLabelsError, MissingReferenceError
from .selection import Pick, SummarySelection, word_counts
from .types import Document

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


@dataclass(frozen=True)
class RougeScore:
    precision: float
    recall: float
    f1: float


def _f1(precision: float, recall: float) -> float:
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def _score(overlap: float, n_cand: int, n_ref: int) -> RougeScore:
    precision = overlap / n_cand if n_cand else 0.0
    recall = overlap / n_ref if n_ref else 0.0
    return RougeScore(precision, recall, _f1(precision, recall))


def _ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def rouge_n(candidate: str, reference: str, n: int) -> RougeScore:
    """Clipped n-gram overlap, n in {1, 2}."""
    if n not in (1, 2):
        raise ValueError("n must be 1 or 2")
    cand = _ngrams(tokenize(candidate), n)
    ref = _ngrams(tokenize(reference), n)
    overlap = sum(min(count, ref[gram]) for gram, count in cand.items())
    return _score(float(overlap), sum(cand.values()), sum(ref.values()))


def _lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        curr = [0] * (len(b) + 1)
        for j, y in enumerate(b, start=1):
            curr[j] = prev[j - 1] + 1 if x == y else max(prev[j], curr[j - 1])
        prev = curr
    return prev[-1]


def rouge_l(candidate: str, reference: str) -> RougeScore:
    """Longest-common-subsequence overlap over whole token sequences."""
    cand = tokenize(candidate)
    ref = tokenize(reference)
    return _score(float(_lcs_length(cand, ref)), len(cand), len(ref))


# ---------------------------------------------------------------------------
# Oracle selectors
# ---------------------------------------------------------------------------

def ext_oracle(doc: Document, budget_words: int) -> SummarySelection:
    """Greedy reference-aware upper bound: each round adds the sentence that
    most improves ROUGE-L F1 of the running summary (joined in document
    order) against the reference; stops at no improvement or budget."""
    if not doc.reference_texts:
        raise MissingReferenceError(f"document {doc.id!r} has no reference summary")
    if budget_words < 1:
        raise ValueError("budget_words must be >= 1")
    texts = doc.sentence_texts
    counts = word_counts(texts)
    reference = " ".join(doc.reference_texts)

    selected: list[int] = []
    picks: list[Pick] = []
    best_f1 = 0.0
    total = 0
    while total < budget_words and len(selected) < len(texts):
        round_best: Optional[tuple[float, int]] = None
        for i in range(len(texts)):
            if i in selected:
                continue
            joined = " ".join(texts[j] for j in sorted(selected + [i]))
            f1 = rouge_l(joined, reference).f1
            # strict > keeps the lower index on ties (ascending scan)
            if round_best is None or f1 > round_best[0]:
                round_best = (f1, i)
        if round_best is None or round_best[0] <= best_f1:
            break
        best_f1, pick = round_best
        selected.append(pick)
        picks.append(Pick(pick, best_f1, 1))
        total += counts[pick]
    indices = tuple(sorted(selected))
    return SummarySelection(sentence_indices=indices,
                            word_count=sum(counts[i] for i in indices),
                            selection_trace=tuple(picks))


def irc_oracle(doc: Document) -> SummarySelection:
    """All Issue/Reason/Conclusion labeled sentences, in document order."""
    if doc.source_irc_labels is None:
        raise MissingLabelsError(f"document {doc.id!r} has no source labels")
    counts = word_counts(doc.sentence_texts)
    indices = tuple(i for i, label in enumerate(doc.source_irc_labels)
                    if label.is_irc)
    return SummarySelection(
        sentence_indices=indices,
        word_count=sum(counts[i] for i in indices),
        selection_trace=tuple(Pick(i, 1.0, 1) for i in indices))


# ---------------------------------------------------------------------------
# IRC coverage
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MatchParams:
    match_threshold: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.match_threshold <= 1.0:
            raise ValueError("match_threshold must be in (0, 1]")


@dataclass(frozen=True)
class IrcCoverage:
    """Coverage fractions; None marks an undefined component (empty
    denominator), excluded from corpus aggregation."""

    src_irc: Optional[float]
    tgt_irc: Optional[float]
    trg_cov: Optional[float]


def irc_coverage(generated: SummarySelection, doc: Document,
                 params: MatchParams = MatchParams()) -> IrcCoverage:
    n = len(doc.sentences)
    for i in generated.sentence_indices:
        if not 0 <= i < n:
            raise ValueError(f"selected index {i} out of range for document {doc.id!r}")

    src_irc: Optional[float] = None
    if doc.source_irc_labels is not None:
        irc_indices = {i for i, label in enumerate(doc.source_irc_labels)
                       if label.is_irc}
        if irc_indices:
            hit = len(irc_indices & set(generated.sentence_indices))
            src_irc = hit / len(irc_indices)

    texts = doc.sentence_texts
    generated_texts = [texts[i] for i in generated.sentence_indices]

    def covered(ref_sentence: str) -> bool:
        return any(rouge_l(g, ref_sentence).f1 >= params.match_threshold
                   for g in generated_texts)

    tgt_irc: Optional[float] = None
    trg_cov: Optional[float] = None
    refs = doc.reference_texts
    if refs:
        flags = [covered(r) for r in refs]
        trg_cov = sum(flags) / len(refs)
        if doc.summary_irc_labels is not None:
            irc_flags = [f for f, label in zip(flags, doc.summary_irc_labels)
                         if label.is_irc]
            if irc_flags:
                tgt_irc = sum(irc_flags) / len(irc_flags)
    return IrcCoverage(src_irc=src_irc, tgt_irc=tgt_irc, trg_cov=trg_cov)


# ---------------------------------------------------------------------------
# Position histograms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PositionHistogram:
    doc_ids: tuple[str, ...]
    positions: tuple[tuple[float, ...], ...]
    bin_edges: np.ndarray
    counts: np.ndarray

    def positions_csv(self) -> str:
        buf = io.StringIO()
        buf.write("doc_id,relative_position\n")
        for doc_id, doc_positions in zip(self.doc_ids, self.positions):
            for pos in doc_positions:
                buf.write(f"{doc_id},{pos:.6f}\n")
        return buf.getvalue()

    def histogram_csv(self) -> str:
        buf = io.StringIO()
        buf.write("bin_lo,bin_hi,count\n")
        for k in range(len(self.counts)):
            buf.write(f"{self.bin_edges[k]:.6f},{self.bin_edges[k + 1]:.6f},"
                      f"{int(self.counts[k])}\n")
        return buf.getvalue()


def position_histogram(selections: Sequence[SummarySelection],
                       docs: Sequence[Document],
                       bins: int = 100) -> PositionHistogram:
    """Relative positions index/(n-1) of selected sentences, plus binned
    counts over [0, 1]. Single-sentence documents map to position 0."""
    if len(selections) != len(docs):
        raise ValueError("selections and docs must align")
    per_doc: list[tuple[float, ...]] = []
    for selection, doc in zip(selections, docs):
        n = len(doc.sentences)
        if n <= 1:
            per_doc.append(tuple(0.0 for _ in selection.sentence_indices))
        else:
            per_doc.append(tuple(i / (n - 1) for i in selection.sentence_indices))
    flat = [p for doc_positions in per_doc for p in doc_positions]
    counts, edges = np.histogram(flat, bins=bins, range=(0.0, 1.0))
    return PositionHistogram(doc_ids=tuple(d.id for d in docs),
                             positions=tuple(per_doc),
                             bin_edges=edges, counts=counts)


# ---------------------------------------------------------------------------
# Corpus-level reports
# ---------------------------------------------------------------------------

_ROUGE_KEYS = ("r1_p", "r1_r", "r1_f1", "r2_p", "r2_r", "r2_f1",
               "rl_p", "rl_r", "rl_f1")
_IRC_KEYS = ("src_irc", "tgt_irc", "trg_cov")


@dataclass(frozen=True)
class DocEval:
    doc_id: str
    metrics: dict[str, Optional[float]]
    warnings: tuple[str, ...] = ()


def evaluate_document(doc: Document, summary_text: str,
                      selection: Optional[SummarySelection] = None,
                      match: MatchParams = MatchParams()) -> DocEval:
    """Per-document metric row; metrics without inputs come back None."""
    metrics: dict[str, Optional[float]] = {k: None for k in _ROUGE_KEYS + _IRC_KEYS}
    warnings: list[str] = []
    reference = " ".join(doc.reference_texts)
    if reference:
        for key, score in (("r1", rouge_n(summary_text, reference, 1)),
                           ("r2", rouge_n(summary_text, reference, 2)),
                           ("rl", rouge_l(summary_text, reference))):
            metrics[f"{key}_p"] = score.precision
            metrics[f"{key}_r"] = score.recall
            metrics[f"{key}_f1"] = score.f1
    else:
        warnings.append("no reference summary; ROUGE skipped")
    if selection is not None:
        coverage = irc_coverage(selection, doc, match)
        metrics["src_irc"] = coverage.src_irc
        metrics["tgt_irc"] = coverage.tgt_irc
        metrics["trg_cov"] = coverage.trg_cov
    return DocEval(doc_id=doc.id, metrics=metrics, warnings=tuple(warnings))


@dataclass(frozen=True)
class EvalReport:
    rows: tuple[DocEval, ...]

    def aggregate(self) -> dict[str, Optional[tuple[float, float]]]:
        """Per-metric (mean, population std) over documents where defined."""
        out: dict[str, Optional[tuple[float, float]]] = {}
        for key in _ROUGE_KEYS + _IRC_KEYS:
            values = [row.metrics[key] for row in self.rows
                      if row.metrics.get(key) is not None]
            if values:
                arr = np.asarray(values, dtype=np.float64)
                out[key] = (float(arr.mean()), float(arr.std()))
            else:
                out[key] = None
        return out

    def per_document_csv(self) -> str:
        buf = io.StringIO()
        keys = _ROUGE_KEYS + _IRC_KEYS
        buf.write("doc_id," + ",".join(keys) + "\n")
        for row in sorted(self.rows, key=lambda r: r.doc_id):
            cells = [row.doc_id]
            for key in keys:
                value = row.metrics.get(key)
                cells.append("" if value is None else f"{value:.6f}")
            buf.write(",".join(cells) + "\n")
        return buf.getvalue()

    def aggregate_csv(self) -> str:
        buf = io.StringIO()
        buf.write("metric,mean,std,n\n")
        agg = self.aggregate()
        for key in _ROUGE_KEYS + _IRC_KEYS:
            stats = agg[key]
            n = sum(1 for row in self.rows if row.metrics.get(key) is not None)
            if stats is None:
                buf.write(f"{key},,,0\n")
            else:
                buf.write(f"{key},{stats[0]:.6f},{stats[1]:.6f},{n}\n")
        return buf.getvalue()

    def table(self) -> str:
        agg = self.aggregate()
        lines = [f"{'metric':<10}{'mean':>10}{'std':>10}"]
        for key in _ROUGE_KEYS + _IRC_KEYS:
            stats = agg[key]
            if stats is None:
                lines.append(f"{key:<10}{'-':>10}{'-':>10}")
            else:
                lines.append(f"{key:<10}{stats[0]:>10.4f}{stats[1]:>10.4f}")
        return "\n".join(lines)


def evaluate_corpus(docs: Sequence[Document], summaries: dict[str, str],
                    selections: Optional[dict[str, SummarySelection]] = None,
                    match: MatchParams = MatchParams()) -> EvalReport:
    """Evaluate summary texts (and optional selections for IRC metrics)
    keyed by document id; aggregation order is sorted by id."""
    rows = []
    for doc in sorted(docs, key=lambda d: d.id):
        if doc.id not in summaries:
            continue
        selection = (selections or {}).get(doc.id)
        rows.append(evaluate_document(doc, summaries[doc.id], selection, match))
    return EvalReport(rows=tuple(rows))


@dataclass(frozen=True)
class PrDeltaReport:
    """Mean precision/recall/F1 deltas (run B minus run A) per ROUGE family."""

    deltas: dict[str, float]
    n_documents: int

    def csv(self) -> str:
        buf = io.StringIO()
        buf.write("metric,delta\n")
        for key in _ROUGE_KEYS:
            buf.write(f"{key},{self.deltas[key]:.6f}\n")
        return buf.getvalue()

    def table(self) -> str:
        lines = [f"{'metric':<10}{'B-A':>10}"]
        for key in _ROUGE_KEYS:
            lines.append(f"{key:<10}{self.deltas[key]:>+10.4f}")
        return "\n".join(lines)


def pr_delta_report(docs: Sequence[Document], run_a: dict[str, str],
                    run_b: dict[str, str]) -> PrDeltaReport:
    """Compare two summary runs over the same documents."""
    if set(run_a) != set(run_b):
        raise ValueError("runs cover different document sets")
    by_id = {d.id: d for d in docs}
    missing = set(run_a) - set(by_id)
    if missing:
        raise ValueError(f"documents not in corpus: {sorted(missing)}")

    sums_a = {key: 0.0 for key in _ROUGE_KEYS}
    sums_b = {key: 0.0 for key in _ROUGE_KEYS}
    n = 0
    for doc_id in sorted(run_a):
        doc = by_id[doc_id]
        reference = " ".join(doc.reference_texts)
        if not reference:
            raise MissingReferenceError(f"document {doc_id!r} has no reference summary")
        for sums, text in ((sums_a, run_a[doc_id]), (sums_b, run_b[doc_id])):
            for key, score in (("r1", rouge_n(text, reference, 1)),
                               ("r2", rouge_n(text, reference, 2)),
                               ("rl", rouge_l(text, reference))):
                sums[f"{key}_p"] += score.precision
                sums[f"{key}_r"] += score.recall
                sums[f"{key}_f1"] += score.f1
        n += 1
    if n == 0:
        raise ValueError("no documents to compare")
    deltas = {key: (sums_b[key] - sums_a[key]) / n for key in _ROUGE_KEYS}
    return PrDeltaReport(deltas=deltas, n_documents=n)
