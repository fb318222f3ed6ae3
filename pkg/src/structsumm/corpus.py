"""Document ingestion: sentence splitting, header removal, HTML structure, corpus IO.

The corpus file format is UTF-8 JSON lines, one document per line:

    {"id": "...", "text": "..."}                       plain text, split here
    {"id": "...", "html": "..."}                       HTML, structure recoverable
    {"id": "...", "sentences": ["...", "..."]}         pre-split input
    optional keys: "summary" (string), "source_labels", "summary_labels"
    (label arrays hold strings from {"Issue","Reason","Conclusion","NonIRC"})
"""
from __future__ import annotations

import json
import re
from dataclasses import replace
from html.parser import HTMLParser
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .errors import CorpusFormatError, EmptyDocumentError
from .types import (
    Document,
    IrcLabel,
    Section,
    Sentence,
    StructureView,
    ViewMethod,
    flat_view,
)

_WS_RE = re.compile(r"\s+")

# Paragraph markers like "[12]" open a new sentence wherever they appear after
# whitespace. Limited to 1-3 digits so bracketed years in citations ("[1999]")
# do not force spurious breaks.
_PARA_MARKER_RE = re.compile(r"\[\d{1,3}\]")

# Legal abbreviations that must not terminate a sentence. Dotted initialisms
# ("v.", "J.A.", "Q.B.", "e.g.") are matched by the generic rule below; this
# list holds the multi-letter forms.
_ABBREVIATIONS = frozenset({
    "no.", "nos.", "ltd.", "inc.", "corp.", "co.", "para.", "paras.",
    "art.", "arts.", "sec.", "secs.", "ch.", "mr.", "mrs.", "ms.", "dr.",
    "prof.", "hon.", "st.", "vs.", "etc.", "cf.", "viz.", "approx.",
})
_DOTTED_INITIALS_RE = re.compile(r"(?:[a-z]\.)+$")


def normalize_whitespace(text: str) -> str:
    return _WS_RE.sub(" ", text).strip()


def _is_abbreviation(text: str, dot_pos: int) -> bool:
    """Whether the '.' at dot_pos ends an abbreviation token rather than a sentence."""
    start = dot_pos
    while start > 0 and not text[start - 1].isspace():
        start -= 1
    token = text[start:dot_pos + 1].lstrip("([\"'“‘").lower()
    if token in _ABBREVIATIONS:
        return True
    return bool(_DOTTED_INITIALS_RE.fullmatch(token))


def _starts_sentence(ch: str) -> bool:
    return ch.isupper() or ch.isdigit() or ch in "([“\""


def split_sentences(text: str, hard_breaks: Iterable[int] = ()) -> list[Sentence]:
    """Split text into sentences with character spans.

    Rule-based: a sentence ends at one of ``. ? ! ;`` followed by whitespace and
    a capital, digit or opening bracket, unless the terminator closes a known
    legal abbreviation. Paragraph markers like "[12]" always start a new
    sentence. ``hard_breaks`` are extra offsets forced to start sentences
    (used for HTML section titles).

    Raises EmptyDocumentError when the text is empty after whitespace
    normalization.
    """
    if not normalize_whitespace(text):
        raise EmptyDocumentError("document text is empty")

    n = len(text)
    starts: set[int] = set()
    for pos in hard_breaks:
        if 0 <= pos < n:
            starts.add(pos)

    for match in _PARA_MARKER_RE.finditer(text):
        pos = match.start()
        if pos == 0 or text[pos - 1].isspace():
            starts.add(pos)

    i = 0
    while i < n:
        ch = text[i]
        if ch in ".?!;":
            j = i + 1
            while j < n and text[j].isspace():
                j += 1
            if j > i + 1 and j < n and _starts_sentence(text[j]):
                if not (ch == "." and _is_abbreviation(text, i)):
                    starts.add(j)
        i += 1

    ordered = sorted(starts | {0})
    sentences: list[Sentence] = []
    for k, a in enumerate(ordered):
        b = ordered[k + 1] if k + 1 < len(ordered) else n
        chunk = text[a:b]
        lead = len(chunk) - len(chunk.lstrip())
        a2 = a + lead
        b2 = a + len(chunk.rstrip())
        if b2 <= a2:
            continue
        sentences.append(Sentence(
            index=len(sentences),
            text=normalize_whitespace(text[a2:b2]),
            char_span=(a2, b2),
        ))
    return sentences


def _sentences_from_presplit(texts: Sequence[str]) -> tuple[str, list[Sentence]]:
    """Body text and sentences for pre-split input; body is the single-space join."""
    normalized = [normalize_whitespace(t) for t in texts]
    normalized = [t for t in normalized if t]
    if not normalized:
        raise EmptyDocumentError("document has no non-empty sentences")
    body = " ".join(normalized)
    sentences = []
    offset = 0
    for k, t in enumerate(normalized):
        sentences.append(Sentence(index=k, text=t, char_span=(offset, offset + len(t))))
        offset += len(t) + 1
    return body, sentences


# ---------------------------------------------------------------------------
# Header removal
# ---------------------------------------------------------------------------

_ORDERED_MARKER_RE = re.compile(r"^(?:\(\d+\)|\[\d+\])")
_JUDGE_RE = re.compile(r"\b[A-Z][A-Za-z'’-]+,?\s+J\.(?:A\.)?(?=\s|$|[,:;)])")
_MONTHS = ("January", "February", "March", "April", "May", "June", "July",
           "August", "September", "October", "November", "December")
_DATE_RE = re.compile(r"\b(?:%s)\s+\d{1,2}\s*,?\s+\d{4}\b" % "|".join(_MONTHS))


def _header_cut_index(doc: Document) -> Optional[int]:
    for s in doc.sentences:
        if s.text.lower().startswith("introduction"):
            return s.index
    for s in doc.sentences:
        if _ORDERED_MARKER_RE.match(s.text):
            return s.index
    for s in doc.sentences:
        if _JUDGE_RE.search(s.text) or _DATE_RE.search(s.text):
            return s.index
    return None


def remove_header(doc: Document) -> Document:
    """Drop descriptive front matter before the first content sentence.

    Heuristics are tried in order: a sentence beginning "Introduction"; a
    sentence starting with an ordered marker "(k)" or "[k]"; a sentence
    containing a judge reference ("Surname J." / "Surname J.A.") or a
    month-day-year date. If none fires the document is returned unchanged
    with header_removed left False. Idempotent.
    """
    if not doc.sentences:
        return doc
    cut = _header_cut_index(doc)
    if cut is None:
        return doc
    if cut == 0:
        return replace(doc, header_removed=True)

    kept = doc.sentences[cut:]
    offset = kept[0].char_span[0]
    new_sentences = [
        Sentence(index=k, text=s.text,
                 char_span=(s.char_span[0] - offset, s.char_span[1] - offset))
        for k, s in enumerate(kept)
    ]
    new_labels = doc.source_irc_labels[cut:] if doc.source_irc_labels is not None else None
    return replace(
        doc,
        body_text=doc.body_text[offset:],
        sentences=new_sentences,
        source_irc_labels=new_labels,
        header_removed=True,
    )


# ---------------------------------------------------------------------------
# HTML structure
# ---------------------------------------------------------------------------

_BLOCK_TAGS = frozenset({
    "p", "div", "br", "li", "ul", "ol", "tr", "td", "th", "table",
    "section", "article", "blockquote", "h1", "h2", "h3", "h4", "h5", "h6",
    "hr", "title", "body",
})
_SKIP_TAGS = frozenset({"script", "style", "head"})
_BOLD_WEIGHT_RE = re.compile(r"font-weight\s*:\s*(bold|bolder|[6-9]00)", re.I)
_ITALIC_STYLE_RE = re.compile(r"font-style\s*:\s*(italic|oblique)", re.I)


class _StructureParser(HTMLParser):
    """Extracts plain text plus the spans of bold+italic runs (section titles)."""

    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.parts: list[str] = []
        self.length = 0
        self.bold = 0
        self.italic = 0
        self.skip = 0
        self.title_spans: list[list[int]] = []
        self._open_title: Optional[list[int]] = None
        self._tag_stack: list[tuple[str, bool, bool]] = []

    def _emit(self, data: str):
        if not data:
            return
        start = self.length
        self.parts.append(data)
        self.length += len(data)
        if self.bold > 0 and self.italic > 0 and data.strip():
            if self._open_title is None:
                self._open_title = [start, self.length]
                self.title_spans.append(self._open_title)
            else:
                self._open_title[1] = self.length
        elif data.strip():
            self._open_title = None

    def _style_flags(self, attrs) -> tuple[bool, bool]:
        style = dict(attrs).get("style") or ""
        return bool(_BOLD_WEIGHT_RE.search(style)), bool(_ITALIC_STYLE_RE.search(style))

    def handle_starttag(self, tag, attrs):
        if tag in _SKIP_TAGS:
            self.skip += 1
            return
        style_bold, style_italic = self._style_flags(attrs)
        bold = tag in ("b", "strong") or style_bold
        italic = tag in ("i", "em") or style_italic
        self._tag_stack.append((tag, bold, italic))
        self.bold += bold
        self.italic += italic
        if tag in _BLOCK_TAGS:
            self._emit("\n")
            self._open_title = None

    def handle_endtag(self, tag):
        if tag in _SKIP_TAGS:
            self.skip = max(0, self.skip - 1)
            return
        for k in range(len(self._tag_stack) - 1, -1, -1):
            open_tag, bold, italic = self._tag_stack[k]
            if open_tag == tag:
                del self._tag_stack[k]
                self.bold = max(0, self.bold - bold)
                self.italic = max(0, self.italic - italic)
                break
        if tag in _BLOCK_TAGS:
            self._emit("\n")
            self._open_title = None

    def handle_data(self, data):
        if self.skip:
            return
        self._emit(data)

    def handle_startendtag(self, tag, attrs):
        if tag in _BLOCK_TAGS:
            self._emit("\n")
            self._open_title = None


def html_to_text(raw_html: str) -> tuple[str, list[tuple[int, int, str]]]:
    """Plain text of an HTML document plus (start, end, title) for each
    bold+italic run, with spans trimmed of surrounding whitespace."""
    parser = _StructureParser()
    parser.feed(raw_html)
    parser.close()
    text = "".join(parser.parts)
    titles = []
    for start, end in parser.title_spans:
        chunk = text[start:end]
        lead = len(chunk) - len(chunk.lstrip())
        a = start + lead
        b = start + len(chunk.rstrip())
        if b > a:
            titles.append((a, b, normalize_whitespace(text[a:b])))
    return text, titles


def document_from_html(doc_id: str, raw_html: str, **extra) -> Document:
    text, titles = html_to_text(raw_html)
    breaks = sorted({t[0] for t in titles} | {t[1] for t in titles})
    sentences = split_sentences(text, hard_breaks=breaks)
    return Document(id=doc_id, body_text=text, sentences=sentences,
                    raw_html=raw_html, **extra)


def document_from_text(doc_id: str, text: str, **extra) -> Document:
    return Document(id=doc_id, body_text=text,
                    sentences=split_sentences(text), **extra)


def _title_sentence_indices(doc: Document,
                            titles: list[tuple[int, int, str]],
                            parsed_text: str) -> list[tuple[int, str]]:
    """Map title spans to the sentence index opening each section."""
    offset = None
    if parsed_text == doc.body_text:
        offset = 0
    elif parsed_text.endswith(doc.body_text):
        # header removal slices body_text from the front; spans shift left
        offset = len(parsed_text) - len(doc.body_text)

    found: list[tuple[int, str]] = []
    if offset is not None:
        for start, _end, title in titles:
            pos = start - offset
            if pos < 0:
                continue
            for s in doc.sentences:
                if s.char_span[1] > pos:
                    found.append((s.index, title))
                    break
    else:
        for _start, _end, title in titles:
            for s in doc.sentences:
                if s.text.lower().startswith(title.lower()):
                    found.append((s.index, title))
                    break
    return found


def extract_html_structure(doc: Document) -> StructureView:
    """Sectionize a document at its bold+italic headings.

    Each heading opens a section running to the next heading; any text before
    the first heading forms an untitled preamble section. Documents without
    detected headings become one whole-document section. Falls back to a flat
    view (with a warning) when raw_html is missing.
    """
    n = len(doc.sentences)
    if doc.raw_html is None:
        return flat_view(n, header_removed=doc.header_removed,
                         warnings=("raw_html missing; produced flat view",))

    parsed_text, titles = html_to_text(doc.raw_html)
    anchors = _title_sentence_indices(doc, titles, parsed_text)

    seen: dict[int, str] = {}
    for idx, title in anchors:
        seen.setdefault(idx, title)
    boundary_indices = sorted(seen)

    sections: list[Section] = []
    if not boundary_indices or boundary_indices[0] > 0:
        first_end = boundary_indices[0] if boundary_indices else n
        sections.append(Section(index=0, sentence_indices=tuple(range(first_end))))
    for k, start in enumerate(boundary_indices):
        end = boundary_indices[k + 1] if k + 1 < len(boundary_indices) else n
        sections.append(Section(index=len(sections),
                                sentence_indices=tuple(range(start, end)),
                                title=seen[start]))
    return StructureView(method=ViewMethod.HTML_ORIGINAL, sections=tuple(sections),
                         header_removed=doc.header_removed)


# ---------------------------------------------------------------------------
# Corpus files
# ---------------------------------------------------------------------------

def _parse_labels(values, count: int, what: str) -> list[IrcLabel]:
    if not isinstance(values, list):
        raise CorpusFormatError(f"{what} must be an array of label strings")
    labels = []
    for v in values:
        try:
            labels.append(IrcLabel.from_string(v))
        except ValueError as exc:
            raise CorpusFormatError(str(exc)) from exc
    if len(labels) != count:
        raise CorpusFormatError(
            f"{what} has {len(labels)} entries for {count} sentences")
    return labels


def document_from_record(record: dict) -> Document:
    if not isinstance(record, dict):
        raise CorpusFormatError("record must be a JSON object")
    doc_id = record.get("id")
    if not isinstance(doc_id, str) or not doc_id:
        raise CorpusFormatError("record needs a non-empty string 'id'")

    raw_html = record.get("html")
    if raw_html is not None:
        text, titles = html_to_text(raw_html)
        breaks = sorted({t[0] for t in titles} | {t[1] for t in titles})
        body, sentences = text, split_sentences(text, hard_breaks=breaks)
    elif record.get("sentences") is not None:
        body, sentences = _sentences_from_presplit(record["sentences"])
    elif record.get("text") is not None:
        body = record["text"]
        sentences = split_sentences(body)
    else:
        raise CorpusFormatError("record needs one of 'text', 'html' or 'sentences'")

    reference = None
    if record.get("summary") is not None:
        reference = split_sentences(record["summary"])

    source_labels = None
    if record.get("source_labels") is not None:
        source_labels = _parse_labels(record["source_labels"], len(sentences),
                                      "source_labels")
    summary_labels = None
    if record.get("summary_labels") is not None:
        summary_labels = _parse_labels(record["summary_labels"],
                                       len(reference or []), "summary_labels")

    return Document(id=doc_id, body_text=body, sentences=sentences,
                    raw_html=raw_html, reference_summary=reference,
                    source_irc_labels=source_labels,
                    summary_irc_labels=summary_labels)


def document_to_record(doc: Document) -> dict:
    record: dict = {"id": doc.id}
    if doc.raw_html is not None:
        record["html"] = doc.raw_html
    else:
        record["sentences"] = [s.text for s in doc.sentences]
    if doc.reference_summary is not None:
        record["summary"] = " ".join(s.text for s in doc.reference_summary)
    if doc.source_irc_labels is not None:
        record["source_labels"] = [lab.value for lab in doc.source_irc_labels]
    if doc.summary_irc_labels is not None:
        record["summary_labels"] = [lab.value for lab in doc.summary_irc_labels]
    return record


def read_corpus(path) -> list[Document]:
    """Read a JSON-lines corpus file; errors carry the offending line number."""
    docs = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"invalid JSON ({exc.msg})", line_no) from exc
            try:
                docs.append(document_from_record(record))
            except CorpusFormatError as exc:
                raise CorpusFormatError(str(exc), line_no) from exc
            except (EmptyDocumentError, ValueError) as exc:
                raise CorpusFormatError(str(exc), line_no) from exc
    return docs


def write_corpus(docs: Iterable[Document], path) -> None:
    """Write documents in canonical JSON-lines form (sorted keys, compact)."""
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        for doc in docs:
            fh.write(json.dumps(document_to_record(doc), ensure_ascii=False,
                                sort_keys=True, separators=(",", ":")))
            fh.write("\n")
