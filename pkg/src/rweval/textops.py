"""Deterministic text structure extraction shared by all metrics.

Paragraphs are blank-line separated blocks; sentences are split on terminal
punctuation followed by whitespace and an uppercase letter or a citation
bracket, with an abbreviation stop-list; tokens are maximal runs of
non-whitespace characters. Citation markers follow the numbered grammar
"[k]" / "[k1, k2, ...]"; non-numeric bracket contents are ignored.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from typing import Iterator

_CITATION_RE = re.compile(r"\[(\d+(?:\s*,\s*\d+)*)\]")
_PARAGRAPH_RE = re.compile(r"\n\s*\n")
_TERMINAL_RE = re.compile(r"[.!?”\"')\]]*[.!?][”\"')]*")

# Tokens whose trailing period does not end a sentence.
ABBREVIATIONS = (
    "et al.", "e.g.", "i.e.", "cf.", "vs.", "viz.", "resp.", "w.r.t.",
    "Fig.", "Figs.", "Eq.", "Eqs.", "Sec.", "Secs.", "Tab.", "Ch.",
    "Dr.", "Mr.", "Ms.", "Prof.", "St.", "no.", "No.", "p.", "pp.",
)


def tokenize(text: str) -> list[str]:
    return text.split()


def count_tokens(text: str) -> int:
    return len(text.split())


def extract_citations(text: str) -> Counter:
    """Multiset of citation indices over every marker occurrence."""
    counts: Counter = Counter()
    for match in _CITATION_RE.finditer(text):
        for part in match.group(1).split(","):
            counts[int(part)] += 1
    return counts


def citation_indices(text: str) -> tuple[int, ...]:
    """Deduplicated citation indices in order of first appearance."""
    seen: set[int] = set()
    ordered: list[int] = []
    for match in _CITATION_RE.finditer(text):
        for part in match.group(1).split(","):
            index = int(part)
            if index not in seen:
                seen.add(index)
                ordered.append(index)
    return tuple(ordered)


@dataclass(frozen=True)
class Sentence:
    text: str
    token_count: int
    cited_indices: tuple[int, ...]


@dataclass(frozen=True)
class Paragraph:
    sentences: tuple[Sentence, ...]

    @property
    def text(self) -> str:
        return " ".join(s.text for s in self.sentences)

    @property
    def token_count(self) -> int:
        return sum(s.token_count for s in self.sentences)

    @property
    def cited_indices(self) -> tuple[int, ...]:
        seen: set[int] = set()
        ordered: list[int] = []
        for sentence in self.sentences:
            for index in sentence.cited_indices:
                if index not in seen:
                    seen.add(index)
                    ordered.append(index)
        return tuple(ordered)


@dataclass(frozen=True)
class SegmentedText:
    raw: str
    paragraphs: tuple[Paragraph, ...]
    total_tokens: int

    def iter_sentences(self) -> Iterator[tuple[int, int, Sentence]]:
        """Yield (paragraph_index, sentence_index, sentence) in text order."""
        for p, paragraph in enumerate(self.paragraphs):
            for s, sentence in enumerate(paragraph.sentences):
                yield p, s, sentence

    @property
    def cited_indices(self) -> tuple[int, ...]:
        return citation_indices(self.raw)

    def render(self) -> str:
        """Canonical form: sentences joined by spaces, paragraphs by blank lines."""
        return "\n\n".join(p.text for p in self.paragraphs)

    def structure(self) -> tuple:
        """Hashable shape used to compare segmentations independent of raw text."""
        return tuple(tuple(p.sentences) for p in self.paragraphs)


def _ends_with_abbreviation(prefix: str) -> bool:
    trimmed = prefix.rstrip()
    return any(trimmed.endswith(abbrev) for abbrev in ABBREVIATIONS)


def split_sentences(paragraph: str) -> list[str]:
    text = paragraph.strip()
    if not text:
        return []
    cuts: list[tuple[int, int]] = []
    for match in _TERMINAL_RE.finditer(text):
        end = match.end()
        follow = end
        while follow < len(text) and text[follow].isspace():
            follow += 1
        if follow == end or follow >= len(text):
            continue
        nxt = text[follow]
        if nxt != "[" and not nxt.isupper():
            continue
        if _ends_with_abbreviation(text[:end]):
            continue
        cuts.append((end, follow))
    sentences: list[str] = []
    start = 0
    for end, follow in cuts:
        piece = text[start:end].strip()
        if piece:
            sentences.append(piece)
        start = follow
    tail = text[start:].strip()
    if tail:
        sentences.append(tail)
    return sentences


def split_paragraphs(text: str) -> list[str]:
    return [block.strip() for block in _PARAGRAPH_RE.split(text) if block.strip()]


def segment(text: str) -> SegmentedText:
    """Segment raw text into paragraphs, sentences, and token counts."""
    paragraphs: list[Paragraph] = []
    for block in split_paragraphs(text):
        sentences = tuple(
            Sentence(t, count_tokens(t), citation_indices(t))
            for t in split_sentences(block)
        )
        if sentences:
            paragraphs.append(Paragraph(sentences))
    total = sum(p.token_count for p in paragraphs)
    return SegmentedText(raw=text, paragraphs=tuple(paragraphs), total_tokens=total)
