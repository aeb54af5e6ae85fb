"""Soft constraints: length interval, citation emphasis, positioning type match.

Emphasis attribution walks the draft exactly like the emphasis algorithm
prescribes: within a paragraph, a sentence with markers resets the active
citation set, a sentence without markers inherits it, and every attributed
sentence adds its token fraction to each active index. A sentence carrying k
citations therefore contributes its full fraction to all k indices, so
per-index values are not a partition of the text.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from ..errors import ConfigurationError, ValidationError
from ..textops import SegmentedText
from .hard import PositioningStyle

# Closed-interval membership uses an absolute slack so float noise at the
# bounds cannot flip a verdict.
INTERVAL_EPS = 1e-9

DEFAULT_TOLERANCE = 0.25


def _check_tolerance(tolerance: float) -> None:
    if not 0 < tolerance < 1:
        raise ConfigurationError("tolerance must lie strictly between 0 and 1")


def _within(value: float, lower: float, upper: float) -> bool:
    return lower - INTERVAL_EPS <= value <= upper + INTERVAL_EPS


@dataclass(frozen=True)
class LengthCheck:
    draft_tokens: int
    gold_tokens: int
    tolerance: float
    passed: bool

    @property
    def bounds(self) -> tuple[float, float]:
        return (1 - self.tolerance) * self.gold_tokens, (1 + self.tolerance) * self.gold_tokens


def length_check(
    draft: SegmentedText, gold: SegmentedText, tolerance: float = DEFAULT_TOLERANCE
) -> LengthCheck:
    """1 iff the draft token count lies in the closed interval around the gold count."""
    _check_tolerance(tolerance)
    if gold.total_tokens < 1:
        raise ValidationError("length check needs a non-empty gold text")
    lower = (1 - tolerance) * gold.total_tokens
    upper = (1 + tolerance) * gold.total_tokens
    return LengthCheck(
        draft_tokens=draft.total_tokens,
        gold_tokens=gold.total_tokens,
        tolerance=tolerance,
        passed=_within(draft.total_tokens, lower, upper),
    )


@dataclass(frozen=True)
class EmphasisProfile:
    per_citation: Mapping[int, float]

    def share(self, index: int) -> float:
        return self.per_citation.get(index, 0.0)


def emphasis_profile(text: SegmentedText) -> EmphasisProfile:
    """Token share allocated to each citation index by the attribution walk."""
    if text.total_tokens < 1:
        raise ValidationError("emphasis profile needs a non-empty text")
    shares: dict[int, float] = {}
    total = text.total_tokens
    for paragraph in text.paragraphs:
        current: tuple[int, ...] = ()
        for sentence in paragraph.sentences:
            if sentence.cited_indices:
                current = sentence.cited_indices
            if current:
                fraction = sentence.token_count / total
                for index in current:
                    shares[index] = shares.get(index, 0.0) + fraction
    return EmphasisProfile(per_citation=shares)


@dataclass(frozen=True)
class EmphasisScore:
    per_citation_pass: Mapping[int, int]
    mean: float


def emphasis_score(
    gen: EmphasisProfile, gold: EmphasisProfile, tolerance: float = DEFAULT_TOLERANCE
) -> EmphasisScore:
    """Per-citation interval checks of generated shares against gold shares.

    Iterates over the gold indices only; generated indices absent from the
    gold profile are hallucinations handled by citation verification. A gold
    share of zero yields the degenerate interval [0, 0], which a zero
    generated share passes.
    """
    _check_tolerance(tolerance)
    if not gold.per_citation:
        raise ValidationError("emphasis score needs a gold profile with at least one citation")
    passes: dict[int, int] = {}
    for index, gold_share in gold.per_citation.items():
        lower = (1 - tolerance) * gold_share
        upper = (1 + tolerance) * gold_share
        passes[index] = int(_within(gen.share(index), lower, upper))
    return EmphasisScore(
        per_citation_pass=passes,
        mean=sum(passes.values()) / len(passes),
    )


def positioning_type_match(detected: PositioningStyle, expected: PositioningStyle) -> bool:
    if expected not in (PositioningStyle.PER_PARAGRAPH, PositioningStyle.FINAL_PARAGRAPH):
        raise ConfigurationError("expected style must be per-paragraph or final-paragraph")
    return detected == expected
