"""Core domain types: documents, sentences, labels, and structure views."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Optional


class IrcLabel(enum.Enum):
    """Argumentative role of a sentence in a legal case decision."""

    ISSUE = "Issue"
    REASON = "Reason"
    CONCLUSION = "Conclusion"
    NON_IRC = "NonIRC"

    @property
    def is_irc(self) -> bool:
        return self is not IrcLabel.NON_IRC

    @classmethod
    def from_string(cls, value: str) -> "IrcLabel":
        for member in cls:
            if member.value == value:
                return member
        raise ValueError(f"unknown IRC label {value!r}")


class ViewMethod(enum.Enum):
    """How a document's section partition was produced."""

    HTML_ORIGINAL = "html"
    C99_TOPIC = "c99"
    HMM_STAGE = "hmm"
    FLAT = "flat"


@dataclass(frozen=True)
class Sentence:
    """A sentence with its 0-based ordinal and character span in the body text."""

    index: int
    text: str
    char_span: tuple[int, int]


@dataclass
class Document:
    """One source document, optionally paired with a reference summary and labels."""

    id: str
    body_text: str
    sentences: list[Sentence]
    raw_html: Optional[str] = None
    reference_summary: Optional[list[Sentence]] = None
    source_irc_labels: Optional[list[IrcLabel]] = None
    summary_irc_labels: Optional[list[IrcLabel]] = None
    header_removed: bool = False

    def __post_init__(self):
        if self.source_irc_labels is not None and len(self.source_irc_labels) != len(self.sentences):
            raise ValueError(
                f"document {self.id!r}: {len(self.source_irc_labels)} source labels "
                f"for {len(self.sentences)} sentences"
            )
        if self.summary_irc_labels is not None:
            n_ref = len(self.reference_summary or [])
            if len(self.summary_irc_labels) != n_ref:
                raise ValueError(
                    f"document {self.id!r}: {len(self.summary_irc_labels)} summary labels "
                    f"for {n_ref} reference sentences"
                )

    @property
    def sentence_texts(self) -> list[str]:
        return [s.text for s in self.sentences]

    @property
    def reference_texts(self) -> list[str]:
        return [s.text for s in self.reference_summary] if self.reference_summary else []


@dataclass(frozen=True)
class Section:
    """A contiguous run of sentence indices, optionally titled."""

    index: int
    sentence_indices: tuple[int, ...]
    title: Optional[str] = None

    def __post_init__(self):
        idx = self.sentence_indices
        if not idx:
            raise ValueError("section must contain at least one sentence")
        if any(b - a != 1 for a, b in zip(idx, idx[1:])):
            raise ValueError("section sentence indices must be contiguous and ascending")

    def __len__(self) -> int:
        return len(self.sentence_indices)


@dataclass(frozen=True)
class StructureView:
    """A partition of a document's sentences into ordered sections."""

    method: ViewMethod
    sections: tuple[Section, ...]
    header_removed: bool = False
    warnings: tuple[str, ...] = ()

    def __post_init__(self):
        flat = [i for sec in self.sections for i in sec.sentence_indices]
        if flat != list(range(len(flat))):
            raise ValueError("sections must partition sentence indices 0..n-1 in order")

    @property
    def n_sentences(self) -> int:
        return sum(len(sec) for sec in self.sections)

    def section_of(self, sentence_index: int) -> int:
        """Section index containing a global sentence index."""
        for sec in self.sections:
            lo, hi = sec.sentence_indices[0], sec.sentence_indices[-1]
            if lo <= sentence_index <= hi:
                return sec.index
        raise IndexError(sentence_index)


def flat_view(n_sentences: int, header_removed: bool = False,
              warnings: tuple[str, ...] = ()) -> StructureView:
    """One section spanning the whole document."""
    return StructureView(
        method=ViewMethod.FLAT,
        sections=(Section(index=0, sentence_indices=tuple(range(n_sentences))),),
        header_removed=header_removed,
        warnings=warnings,
    )


def view_from_boundaries(method: ViewMethod, n_sentences: int, boundaries: list[int],
                         titles: Optional[list[Optional[str]]] = None,
                         header_removed: bool = False,
                         warnings: tuple[str, ...] = ()) -> StructureView:
    """Build a view from sorted interior boundary positions (section starts > 0)."""
    starts = [0] + sorted(set(b for b in boundaries if 0 < b < n_sentences))
    sections = []
    for k, start in enumerate(starts):
        end = starts[k + 1] if k + 1 < len(starts) else n_sentences
        title = titles[k] if titles is not None else None
        sections.append(Section(index=k, sentence_indices=tuple(range(start, end)), title=title))
    return StructureView(method=method, sections=tuple(sections),
                         header_removed=header_removed, warnings=warnings)


def copy_document(doc: Document, **changes) -> Document:
    return replace(doc, **changes)
