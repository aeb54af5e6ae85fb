"""Expert arena: TrueSkill ratings, matchmaking, vote alignment, HTTP service."""

from .ratings import (
    BETA,
    DRAW_PROBABILITY,
    MU0,
    Outcome,
    Rating,
    SIGMA0,
    TAU,
    match_quality,
    next_pair,
    update_ratings,
)
from .votes import FrameworkVote, framework_vote, match_rate

__all__ = [
    "BETA",
    "DRAW_PROBABILITY",
    "FrameworkVote",
    "MU0",
    "Outcome",
    "Rating",
    "SIGMA0",
    "TAU",
    "framework_vote",
    "match_quality",
    "match_rate",
    "next_pair",
    "update_ratings",
]
