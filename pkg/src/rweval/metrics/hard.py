"""Hard constraints: citation verification, coherence, positioning existence.

Citation verification is pure set arithmetic. Coherence treats each
(citation sentence, cited paper) pair as an entailment question for the
judge, using the cited paper's abstract and introduction as context; a draft
passes only with a perfect ratio. Positioning existence and type are decided
jointly by a single judge prompt over the whole draft.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import IntEnum
from typing import Callable, Iterable, Sequence, TypeVar

from ..corpus import CitationSet
from ..errors import ConfigurationError, JudgeUnavailableError, ValidationError
from ..judge.base import JudgeHandle
from ..judge.prompts import ANSWER_DOMAINS, TIE_BREAKERS, load_template, render_prompt
from ..textops import SegmentedText, extract_citations

_T = TypeVar("_T")
_R = TypeVar("_R")


class PositioningStyle(IntEnum):
    PER_PARAGRAPH = 1
    FINAL_PARAGRAPH = 2
    NONE = 3


STYLE_LABELS = {
    PositioningStyle.PER_PARAGRAPH: "per-paragraph",
    PositioningStyle.FINAL_PARAGRAPH: "final-paragraph",
    PositioningStyle.NONE: "none",
}


def _map_bounded(fn: Callable[[_T], _R], items: Sequence[_T], concurrency: int) -> list[_R]:
    """Apply fn to items, optionally fanning out, preserving input order."""
    if concurrency <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=concurrency) as pool:
        return list(pool.map(fn, items))


@dataclass(frozen=True)
class CitationVerification:
    missing_ratio: float
    hallucination_ratio: float
    missing_indices: frozenset[int]
    hallucinated_indices: frozenset[int]

    @property
    def passes(self) -> bool:
        return self.missing_ratio == 0.0 and self.hallucination_ratio == 0.0


def verify_citations(draft: SegmentedText, provided: Iterable[int]) -> CitationVerification:
    provided_set = frozenset(provided)
    if not provided_set:
        raise ConfigurationError("citation verification needs a non-empty provided set")
    cited = frozenset(extract_citations(draft.raw))
    missing = provided_set - cited
    hallucinated = cited - provided_set
    return CitationVerification(
        missing_ratio=len(missing) / len(provided_set),
        hallucination_ratio=len(hallucinated) / len(cited) if cited else 0.0,
        missing_indices=missing,
        hallucinated_indices=hallucinated,
    )


@dataclass(frozen=True)
class CoherencePair:
    paragraph_index: int
    sentence_index: int
    sentence: str
    citation_index: int
    verdict: str | None
    reasoning: str
    error: str | None = None


@dataclass(frozen=True)
class CoherenceResult:
    pair_results: tuple[CoherencePair, ...]
    coherence_ratio: float
    passes: bool
    complete: bool
    skipped_indices: frozenset[int]

    @property
    def failing_pairs(self) -> tuple[CoherencePair, ...]:
        return tuple(p for p in self.pair_results if p.verdict == "no")


def coherence(
    draft: SegmentedText,
    citations: CitationSet,
    judge: JudgeHandle,
    *,
    provided: Iterable[int] | None = None,
    concurrency: int = 1,
) -> CoherenceResult:
    """Judge every (citation sentence, cited paper) pair of the draft.

    Only sentences literally containing a marker are checked, one query per
    cited index. Indices without source material (hallucinated, or outside
    the provided subset) are skipped and recorded; they already fail citation
    verification. Judge failures exclude the pair from the ratio and mark the
    result incomplete.
    """
    usable = set(citations.cited if provided is None else provided) & set(citations.cited)
    template = load_template("coherence")
    domain = ANSWER_DOMAINS["coherence"]

    queries: list[tuple[int, int, str, int]] = []
    skipped: set[int] = set()
    for p, s, sentence in draft.iter_sentences():
        for index in sentence.cited_indices:
            if index not in usable:
                skipped.add(index)
                continue
            queries.append((p, s, sentence.text, index))

    def one(query: tuple[int, int, str, int]) -> CoherencePair:
        p, s, text, index = query
        paper = citations.cited[index]
        system, user = render_prompt(
            template,
            {
                "paper_context": paper.abstract + "\n\n" + paper.introduction,
                "citation_sentence": text,
                "citation_number": str(index),
            },
        )
        try:
            verdict = judge.ask(system, user, domain)
        except JudgeUnavailableError as exc:
            return CoherencePair(p, s, text, index, None, "", error=str(exc))
        reasoning = verdict.votes[0].reasoning if verdict.votes else ""
        return CoherencePair(p, s, text, index, verdict.final, reasoning)

    pairs = tuple(_map_bounded(one, queries, concurrency))
    evaluated = [p for p in pairs if p.verdict is not None]
    if not queries:
        ratio = 1.0
    elif not evaluated:
        ratio = 0.0
    else:
        ratio = sum(1 for p in evaluated if p.verdict == "yes") / len(evaluated)
    return CoherenceResult(
        pair_results=pairs,
        coherence_ratio=ratio,
        passes=ratio == 1.0,
        complete=len(evaluated) == len(pairs),
        skipped_indices=frozenset(skipped),
    )


@dataclass(frozen=True)
class RatioResult:
    ratio: float
    per_paragraph: tuple[bool | None, ...]
    complete: bool
    fallback_direct: bool = False


def positioning_ratio(
    draft: SegmentedText,
    style: PositioningStyle,
    judge: JudgeHandle,
    *,
    concurrency: int = 1,
) -> RatioResult:
    """Fraction of positively evaluated paragraphs under the given style.

    Per-paragraph style runs one direct contribution check per paragraph.
    Final-paragraph style runs one pairwise check per (context paragraph,
    final paragraph) pair; a single-paragraph draft falls back to the direct
    check to avoid an empty context set.
    """
    if style not in (PositioningStyle.PER_PARAGRAPH, PositioningStyle.FINAL_PARAGRAPH):
        raise ConfigurationError("positioning ratio needs a per-paragraph or final-paragraph style")
    if not draft.paragraphs:
        raise ValidationError("cannot evaluate positioning on an empty draft")

    fallback = False
    if style == PositioningStyle.PER_PARAGRAPH or len(draft.paragraphs) == 1:
        fallback = style == PositioningStyle.FINAL_PARAGRAPH
        template = load_template("positioning-ratio-direct")
        domain = ANSWER_DOMAINS["positioning-ratio-direct"]
        slot_sets = [{"paragraph": p.text} for p in draft.paragraphs]
    else:
        template = load_template("positioning-ratio-pairwise")
        domain = ANSWER_DOMAINS["positioning-ratio-pairwise"]
        final = draft.paragraphs[-1].text
        slot_sets = [
            {"context_paragraph": p.text, "final_paragraph": final}
            for p in draft.paragraphs[:-1]
        ]

    def one(slots: dict[str, str]) -> bool | None:
        system, user = render_prompt(template, slots)
        try:
            verdict = judge.ask(system, user, domain)
        except JudgeUnavailableError:
            return None
        return verdict.final == "yes"

    outcomes = tuple(_map_bounded(one, slot_sets, concurrency))
    evaluated = [o for o in outcomes if o is not None]
    ratio = sum(evaluated) / len(evaluated) if evaluated else 0.0
    return RatioResult(
        ratio=ratio,
        per_paragraph=outcomes,
        complete=len(evaluated) == len(outcomes),
        fallback_direct=fallback,
    )


@dataclass(frozen=True)
class PositioningResult:
    exists: bool
    detected_type: PositioningStyle
    type_match: bool
    per_paragraph: tuple[bool | None, ...]
    ratio: float
    reasoning: str
    confident: bool
    complete: bool


def positioning(
    draft: SegmentedText,
    expected: PositioningStyle,
    judge: JudgeHandle,
    *,
    concurrency: int = 1,
) -> PositioningResult:
    """Joint existence/type detection plus the paragraph-level ratio.

    The ratio is measured against the expected style from the generation
    prompt; it quantifies how far the draft satisfies the requested
    expression, whichever style the detector saw. A three-way vote split
    resolves to "none" and is flagged non-confident.
    """
    if expected not in (PositioningStyle.PER_PARAGRAPH, PositioningStyle.FINAL_PARAGRAPH):
        raise ConfigurationError("expected style must be per-paragraph or final-paragraph")
    if not draft.paragraphs:
        raise ValidationError("cannot evaluate positioning on an empty draft")

    template = load_template("positioning-type")
    system, user = render_prompt(template, {"draft": draft.raw.strip()})
    verdict = judge.ask(
        system,
        user,
        ANSWER_DOMAINS["positioning-type"],
        tie_breaker=TIE_BREAKERS["positioning-type"],
    )
    detected = PositioningStyle(int(verdict.final))
    ratio = positioning_ratio(draft, expected, judge, concurrency=concurrency)
    return PositioningResult(
        exists=detected != PositioningStyle.NONE,
        detected_type=detected,
        type_match=detected == expected,
        per_paragraph=ratio.per_paragraph,
        ratio=ratio.ratio,
        reasoning=verdict.votes[0].reasoning if verdict.votes else "",
        confident=verdict.confident,
        complete=verdict.complete and ratio.complete,
    )
