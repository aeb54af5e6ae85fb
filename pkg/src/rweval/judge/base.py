"""Verdict types and majority-vote aggregation shared by judge backends."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Protocol, Sequence

from ..errors import ConfigurationError


@dataclass(frozen=True)
class Vote:
    reasoning: str
    answer: str


@dataclass(frozen=True)
class JudgeVerdict:
    """One judge decision: the individual votes and the majority outcome."""

    votes: tuple[Vote, ...]
    final: str
    confident: bool
    failures: int = 0

    @property
    def complete(self) -> bool:
        return self.failures == 0


def aggregate_votes(
    answers: Sequence[str],
    answer_domain: Sequence[str],
    repetitions: int,
    tie_breaker: str | None = None,
) -> tuple[str, bool]:
    """Majority decision over repeated answers.

    The final answer is the mode; exact ties resolve to `tie_breaker` when
    given, otherwise to the earliest tied answer in domain order. `confident`
    holds when the mode covers a strict majority of the configured
    repetitions, so verdicts with dropped votes cannot be confident.
    """
    if not answers:
        raise ConfigurationError("cannot aggregate an empty vote list")
    unknown = set(answers) - set(answer_domain)
    if unknown:
        raise ConfigurationError(f"votes outside the answer domain: {sorted(unknown)}")
    counts = Counter(answers)
    top = max(counts.values())
    tied = [a for a in answer_domain if counts.get(a) == top]
    if len(tied) == 1:
        final = tied[0]
    elif tie_breaker is not None and tie_breaker in answer_domain:
        final = tie_breaker
    else:
        final = tied[0]
    return final, top > repetitions / 2


class JudgeHandle(Protocol):
    """Anything that can answer a rendered prompt with a categorical verdict."""

    def ask(
        self,
        system: str,
        user: str,
        answer_domain: Sequence[str],
        *,
        tie_breaker: str | None = None,
    ) -> JudgeVerdict: ...


class GeneratorHandle(Protocol):
    """Anything that can turn a (system, user) prompt pair into text."""

    def generate(self, system: str, user: str) -> str: ...
