"""Two-player TrueSkill updates, match quality, and informative pairing.

Canonical defaults: mu0 = 25, sigma0 = 25/3, beta = sigma0/2 (performance
noise), tau = sigma0/100 (dynamics), draw probability 0.10. Prior variances
are inflated by tau^2 before each update, and the draw margin is derived from
the draw probability for a two-player match.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from statistics import NormalDist
from typing import Sequence

from ..errors import ValidationError

MU0 = 25.0
SIGMA0 = MU0 / 3.0
BETA = SIGMA0 / 2.0
TAU = SIGMA0 / 100.0
DRAW_PROBABILITY = 0.10

_NORMAL = NormalDist()


@dataclass(frozen=True)
class Rating:
    mu: float = MU0
    sigma: float = SIGMA0

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValidationError("rating sigma must be positive")

    @property
    def conservative(self) -> float:
        """mu - 3*sigma, the pessimistic skill estimate used for ranking."""
        return self.mu - 3.0 * self.sigma


class Outcome(Enum):
    WIN = "win"
    LOSS = "loss"
    TIE = "tie"


def _draw_margin() -> float:
    return _NORMAL.inv_cdf((DRAW_PROBABILITY + 1.0) / 2.0) * math.sqrt(2.0) * BETA


def _v_win(diff: float, margin: float) -> float:
    x = diff - margin
    denom = _NORMAL.cdf(x)
    return _NORMAL.pdf(x) / denom if denom > 0 else -x


def _w_win(diff: float, margin: float) -> float:
    v = _v_win(diff, margin)
    return v * (v + diff - margin)


def _v_draw(diff: float, margin: float) -> float:
    abs_diff = abs(diff)
    a, b = margin - abs_diff, -margin - abs_diff
    denom = _NORMAL.cdf(a) - _NORMAL.cdf(b)
    value = (_NORMAL.pdf(b) - _NORMAL.pdf(a)) / denom if denom > 0 else a
    return -value if diff < 0 else value


def _w_draw(diff: float, margin: float) -> float:
    abs_diff = abs(diff)
    a, b = margin - abs_diff, -margin - abs_diff
    denom = _NORMAL.cdf(a) - _NORMAL.cdf(b)
    if denom <= 0:
        raise FloatingPointError("draw update is numerically degenerate")
    v = _v_draw(abs_diff, margin)
    return v * v + (a * _NORMAL.pdf(a) - b * _NORMAL.pdf(b)) / denom


def _posterior(mu: float, variance: float, c: float, v: float, w: float, sign: float) -> Rating:
    new_mu = mu + sign * (variance / c) * v
    new_sigma = math.sqrt(variance * (1.0 - (variance / (c * c)) * w))
    return Rating(new_mu, new_sigma)


def update_ratings(a: Rating, b: Rating, outcome: Outcome) -> tuple[Rating, Rating]:
    """Posterior ratings after one match, from a's perspective."""
    if outcome == Outcome.LOSS:
        new_b, new_a = update_ratings(b, a, Outcome.WIN)
        return new_a, new_b

    var_a = a.sigma**2 + TAU**2
    var_b = b.sigma**2 + TAU**2
    c = math.sqrt(var_a + var_b + 2.0 * BETA**2)
    margin = _draw_margin() / c
    diff = (a.mu - b.mu) / c

    if outcome == Outcome.WIN:
        v = _v_win(diff, margin)
        w = _w_win(diff, margin)
        return (
            _posterior(a.mu, var_a, c, v, w, +1.0),
            _posterior(b.mu, var_b, c, v, w, -1.0),
        )
    v = _v_draw(diff, margin)
    w = _w_draw(diff, margin)
    return (
        _posterior(a.mu, var_a, c, v, w, +1.0),
        _posterior(b.mu, var_b, c, v, w, -1.0),
    )


def match_quality(a: Rating, b: Rating) -> float:
    """Draw-probability-based match quality in (0, 1]; symmetric in a and b."""
    spread = 2.0 * BETA**2 + a.sigma**2 + b.sigma**2
    return math.sqrt(2.0 * BETA**2 / spread) * math.exp(
        -((a.mu - b.mu) ** 2) / (2.0 * spread)
    )


def next_pair(
    pool: Sequence[tuple[str, Rating]],
    history: Sequence[tuple[str, str]] = (),
) -> tuple[str, str]:
    """Most informative pairing: highest match quality, tie-broken by fewest
    prior meetings, then by lexicographic pair order.

    `history` lists previously played pairs as (name, name) tuples.
    """
    if len(pool) < 2:
        raise ValidationError("pairing needs at least two rated generators")
    meetings: dict[frozenset, int] = {}
    for left, right in history:
        key = frozenset((left, right))
        meetings[key] = meetings.get(key, 0) + 1

    entries = sorted(pool, key=lambda item: item[0])
    candidates: list[tuple[float, int, tuple[str, str]]] = []
    for i in range(len(entries)):
        for j in range(i + 1, len(entries)):
            name_a, rating_a = entries[i]
            name_b, rating_b = entries[j]
            quality = match_quality(rating_a, rating_b)
            played = meetings.get(frozenset((name_a, name_b)), 0)
            candidates.append((quality, played, (name_a, name_b)))
    candidates.sort(key=lambda item: (-item[0], item[1], item[2]))
    return candidates[0][2]
