"""Framework-side pairwise votes and the expert-alignment match rate.

For coherence and positioning, the framework compares the two generators'
module scores at one iteration and picks the higher one. Feedback-following
compares per-criterion improvements between consecutive iterations: the
generator improving on more criteria wins.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from ..errors import ValidationError
from ..pipeline import DELTA_CRITERIA, RunTrace, _criterion_value

VOTE_CRITERIA = ("coherence", "positioning", "feedback-following")


@dataclass(frozen=True)
class FrameworkVote:
    criterion: str
    winner: str | None  # None encodes a tie
    abstained: bool = False

    @property
    def tie(self) -> bool:
        return self.winner is None


def _iteration_record(trace: RunTrace, iteration: int):
    for record in trace.iterations:
        if record.iteration == iteration:
            return record
    raise ValidationError(
        f"trace of {trace.generator!r} has no iteration {iteration}"
    )


def framework_vote(
    trace_a: RunTrace, trace_b: RunTrace, criterion: str, iteration: int
) -> FrameworkVote:
    """Decide which generator the framework prefers at one iteration."""
    if criterion not in VOTE_CRITERIA:
        raise ValidationError(f"unknown vote criterion {criterion!r}")

    if criterion == "feedback-following":
        if iteration < 2:
            raise ValidationError("feedback-following needs a previous iteration to compare")
        wins_a = wins_b = 0
        prev_a = _iteration_record(trace_a, iteration - 1)
        prev_b = _iteration_record(trace_b, iteration - 1)
        cur_a = _iteration_record(trace_a, iteration)
        cur_b = _iteration_record(trace_b, iteration)
        if not all(r.report.complete for r in (prev_a, prev_b, cur_a, cur_b)):
            return FrameworkVote(criterion, None, abstained=True)
        for key in DELTA_CRITERIA:
            delta_a = _criterion_value(cur_a.report, key) - _criterion_value(prev_a.report, key)
            delta_b = _criterion_value(cur_b.report, key) - _criterion_value(prev_b.report, key)
            if delta_a > delta_b:
                wins_a += 1
            elif delta_b > delta_a:
                wins_b += 1
        if wins_a > wins_b:
            return FrameworkVote(criterion, trace_a.generator)
        if wins_b > wins_a:
            return FrameworkVote(criterion, trace_b.generator)
        return FrameworkVote(criterion, None)

    record_a = _iteration_record(trace_a, iteration)
    record_b = _iteration_record(trace_b, iteration)
    if not record_a.report.complete or not record_b.report.complete:
        return FrameworkVote(criterion, None, abstained=True)
    if criterion == "coherence":
        score_a = record_a.report.coherence.coherence_ratio
        score_b = record_b.report.coherence.coherence_ratio
    else:
        score_a = record_a.report.positioning.ratio
        score_b = record_b.report.positioning.ratio
    if score_a > score_b:
        return FrameworkVote(criterion, trace_a.generator)
    if score_b > score_a:
        return FrameworkVote(criterion, trace_b.generator)
    return FrameworkVote(criterion, None)


@dataclass(frozen=True)
class ExpertJudgment:
    criterion: str
    winner: str | None  # None encodes a tie


def match_rate(
    expert: Sequence[ExpertJudgment], framework: Sequence[FrameworkVote]
) -> dict[str, float]:
    """Per-criterion fraction of framework votes agreeing with the experts.

    Lists must align one-to-one (same criterion at each position). Framework
    abstentions count as non-matches.
    """
    if len(expert) != len(framework):
        raise ValidationError(
            f"misaligned judgment lists: {len(expert)} expert vs {len(framework)} framework"
        )
    matches: dict[str, int] = {}
    totals: dict[str, int] = {}
    for judgment, vote in zip(expert, framework):
        if judgment.criterion != vote.criterion:
            raise ValidationError(
                f"criterion mismatch: {judgment.criterion!r} vs {vote.criterion!r}"
            )
        totals[judgment.criterion] = totals.get(judgment.criterion, 0) + 1
        agreed = not vote.abstained and judgment.winner == vote.winner
        matches[judgment.criterion] = matches.get(judgment.criterion, 0) + int(agreed)
    return {criterion: matches[criterion] / totals[criterion] for criterion in totals}
