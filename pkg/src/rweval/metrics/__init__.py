"""Hard and soft constraint metrics over segmented related-work drafts."""

from .hard import (
    CitationVerification,
    CoherencePair,
    CoherenceResult,
    PositioningResult,
    PositioningStyle,
    RatioResult,
    coherence,
    positioning,
    positioning_ratio,
    verify_citations,
)
from .soft import (
    EmphasisProfile,
    EmphasisScore,
    LengthCheck,
    emphasis_profile,
    emphasis_score,
    length_check,
    positioning_type_match,
)

__all__ = [
    "CitationVerification",
    "CoherencePair",
    "CoherenceResult",
    "EmphasisProfile",
    "EmphasisScore",
    "LengthCheck",
    "PositioningResult",
    "PositioningStyle",
    "RatioResult",
    "coherence",
    "emphasis_profile",
    "emphasis_score",
    "length_check",
    "positioning",
    "positioning_ratio",
    "positioning_type_match",
    "verify_citations",
]
