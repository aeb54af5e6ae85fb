"""Iterative draft generation, evaluation, report aggregation, and feedback.

One run drives a generator over K iterations for a single citation set: the
first iteration uses the cold-start draft prompt, later iterations feed the
previous draft and the feedback synthesized from its evaluation report back
into the revise prompt. Dynamic scenarios perturb the provided papers or the
expected positioning style at a configurable intervention iteration.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from .corpus import CitationSet, PaperRecord
from .errors import ConfigurationError, ValidationError
from .judge.base import GeneratorHandle, JudgeHandle
from .judge.prompts import build_cited_papers_block, load_template, render_prompt
from .metrics.hard import (
    CitationVerification,
    CoherencePair,
    CoherenceResult,
    PositioningResult,
    PositioningStyle,
    coherence,
    positioning,
    verify_citations,
)
from .metrics.soft import (
    DEFAULT_TOLERANCE,
    EmphasisProfile,
    EmphasisScore,
    LengthCheck,
    emphasis_profile,
    emphasis_score,
    length_check,
)
from .textops import segment

TRACE_SCHEMA = "rweval.trace/1"

SCENARIOS = ("full", "new-paper", "style-change")

_STYLE_INSTRUCTIONS = {
    PositioningStyle.PER_PARAGRAPH: (
        "In each paragraph, you need to state the main paper's contribution "
        "and its position among the literature in accordance with the "
        "corresponding subject matter of that paragraph."
    ),
    PositioningStyle.FINAL_PARAGRAPH: (
        "You need to emphasize the contribution and the position of the main "
        "paper in the final paragraph by addressing the points mentioned in "
        "all previous paragraphs."
    ),
}


@dataclass(frozen=True)
class EvaluationReport:
    """Full hard+soft scorecard for one draft at one iteration."""

    iteration: int
    citation: CitationVerification
    coherence: CoherenceResult
    positioning: PositioningResult
    length: LengthCheck
    emphasis: EmphasisScore
    type_match: bool
    justifications: dict[str, str]
    complete: bool

    @property
    def hallucination_pass(self) -> bool:
        return self.citation.hallucination_ratio == 0.0

    @property
    def missing_pass(self) -> bool:
        return self.citation.missing_ratio == 0.0

    @property
    def coherence_pass(self) -> bool:
        return self.coherence.coherence_ratio == 1.0

    @property
    def positioning_pass(self) -> bool:
        return self.positioning.exists


@dataclass
class RunConfig:
    iterations: int = 5
    scenario: str = "full"
    holdout_fraction: float = 0.25
    intervention_iteration: int = 3
    expected_style: PositioningStyle = PositioningStyle.PER_PARAGRAPH
    tolerance: float = DEFAULT_TOLERANCE
    concurrency: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.iterations < 1:
            raise ConfigurationError("iterations must be >= 1")
        if self.scenario not in SCENARIOS:
            raise ConfigurationError(f"unknown scenario {self.scenario!r}")
        # The intervention only exists in the dynamic scenarios; a full run
        # with K below the default intervention iteration is fine.
        if self.scenario != "full" and not 1 <= self.intervention_iteration <= self.iterations:
            raise ConfigurationError("intervention iteration must lie within 1..K")
        if not 0 < self.holdout_fraction < 1:
            raise ConfigurationError("holdout fraction must lie strictly between 0 and 1")
        if self.expected_style not in (
            PositioningStyle.PER_PARAGRAPH,
            PositioningStyle.FINAL_PARAGRAPH,
        ):
            raise ConfigurationError("expected style must be per-paragraph or final-paragraph")

    def snapshot(self) -> dict:
        return {
            "iterations": self.iterations,
            "scenario": self.scenario,
            "holdout_fraction": self.holdout_fraction,
            "intervention_iteration": self.intervention_iteration,
            "expected_style": int(self.expected_style),
            "tolerance": self.tolerance,
            "concurrency": self.concurrency,
            "seed": self.seed,
            "holdout_rounding": "half-away-from-zero",
        }


@dataclass(frozen=True)
class ScenarioState:
    provided: tuple[int, ...]
    holdout: tuple[int, ...]
    expected_style: PositioningStyle


def _flip(style: PositioningStyle) -> PositioningStyle:
    if style == PositioningStyle.PER_PARAGRAPH:
        return PositioningStyle.FINAL_PARAGRAPH
    return PositioningStyle.PER_PARAGRAPH


def _round_half_away(value: float) -> int:
    return int(math.floor(value + 0.5)) if value >= 0 else -int(math.floor(-value + 0.5))


def apply_scenario(
    config: RunConfig, citation_set: CitationSet, iteration: int
) -> ScenarioState:
    """Effective provided papers and expected style for one iteration.

    new-paper holds back the highest-indexed round(fraction*n) papers before
    the intervention iteration and reintroduces them from it on; style-change
    flips the expected positioning style at the intervention iteration.
    """
    if not 1 <= iteration <= config.iterations:
        raise ConfigurationError(f"iteration {iteration} outside 1..{config.iterations}")
    indices = citation_set.indices
    if config.scenario == "new-paper":
        held = _round_half_away(config.holdout_fraction * len(indices))
        if held >= len(indices):
            raise ValidationError("holdout would leave no papers to provide")
        if iteration < config.intervention_iteration and held > 0:
            return ScenarioState(
                provided=indices[:-held],
                holdout=indices[-held:],
                expected_style=config.expected_style,
            )
        return ScenarioState(provided=indices, holdout=(), expected_style=config.expected_style)
    if config.scenario == "style-change":
        style = (
            _flip(config.expected_style)
            if iteration >= config.intervention_iteration
            else config.expected_style
        )
        return ScenarioState(provided=indices, holdout=(), expected_style=style)
    return ScenarioState(provided=indices, holdout=(), expected_style=config.expected_style)


def evaluate_draft(
    draft_text: str,
    citation_set: CitationSet,
    judge: JudgeHandle,
    *,
    provided: Sequence[int] | None = None,
    expected_style: PositioningStyle = PositioningStyle.PER_PARAGRAPH,
    tolerance: float = DEFAULT_TOLERANCE,
    iteration: int = 1,
    concurrency: int = 1,
) -> EvaluationReport:
    """Evaluate one draft against every hard and soft constraint."""
    draft = segment(draft_text)
    gold = segment(citation_set.gold_related_work)
    provided_indices = tuple(provided) if provided is not None else citation_set.indices

    citation = verify_citations(draft, provided_indices)
    coherence_result = coherence(
        draft, citation_set, judge, provided=provided_indices, concurrency=concurrency
    )
    if draft.paragraphs:
        positioning_result = positioning(draft, expected_style, judge, concurrency=concurrency)
    else:
        positioning_result = PositioningResult(
            exists=False,
            detected_type=PositioningStyle.NONE,
            type_match=False,
            per_paragraph=(),
            ratio=0.0,
            reasoning="empty draft",
            confident=True,
            complete=True,
        )
    length = length_check(draft, gold, tolerance)
    gen_profile = (
        emphasis_profile(draft) if draft.total_tokens >= 1 else EmphasisProfile({})
    )
    emphasis = emphasis_score(gen_profile, emphasis_profile(gold), tolerance)

    justifications = {
        "citation_verification": (
            f"missing {_fmt_indices(citation.missing_indices)}; "
            f"hallucinated {_fmt_indices(citation.hallucinated_indices)}"
        ),
        "coherence": (
            f"{len(coherence_result.failing_pairs)} of "
            f"{len(coherence_result.pair_results)} checked pairs lack coherence"
        ),
        "positioning": positioning_result.reasoning,
        "length": (
            f"{length.draft_tokens} tokens against a gold section of "
            f"{length.gold_tokens} tokens at tolerance {length.tolerance:g}"
        ),
        "emphasis": (
            f"{sum(emphasis.per_citation_pass.values())} of "
            f"{len(emphasis.per_citation_pass)} citations within their emphasis interval"
        ),
    }
    return EvaluationReport(
        iteration=iteration,
        citation=citation,
        coherence=coherence_result,
        positioning=positioning_result,
        length=length,
        emphasis=emphasis,
        type_match=positioning_result.type_match,
        justifications=justifications,
        complete=coherence_result.complete and positioning_result.complete,
    )


def _fmt_indices(indices) -> str:
    ordered = sorted(indices)
    return "[" + ", ".join(str(i) for i in ordered) + "]" if ordered else "none"


def serialize_report(report: EvaluationReport, expected_style: PositioningStyle) -> str:
    """Plain-text report in the five item groups the feedback prompt expects."""
    lines = []
    lines.append(
        "1. Missing papers: "
        f"{_fmt_indices(report.citation.missing_indices)}. Hallucinated papers: "
        f"{_fmt_indices(report.citation.hallucinated_indices)}."
    )
    lower, upper = report.length.bounds
    verdict = "within" if report.length.passed else "outside"
    lines.append(
        f"2. Length: the draft has {report.length.draft_tokens} tokens; the expected "
        f"length is between {lower:g} and {upper:g} tokens (gold section: "
        f"{report.length.gold_tokens} tokens). The draft is {verdict} the expected interval."
    )
    emphasis_bits = []
    for index in sorted(report.emphasis.per_citation_pass):
        ok = report.emphasis.per_citation_pass[index]
        emphasis_bits.append(f"paper [{index}]: {'satisfied' if ok else 'off target'}")
    lines.append(
        f"3. Citation emphasis: {'; '.join(emphasis_bits)}. "
        f"Mean emphasis score: {report.emphasis.mean:.2f}."
    )
    failing = report.coherence.failing_pairs
    if failing:
        listed = " ".join(
            f'- "{pair.sentence}" (cited paper [{pair.citation_index}])' for pair in failing
        )
        lines.append(f"4. Sentences lacking coherence: {listed}")
    else:
        lines.append("4. Sentences lacking coherence: none.")
    detected = report.positioning.detected_type
    match_text = "matches" if report.type_match else "does not match"
    lines.append(
        f"5. Intended contribution type: {_style_label(expected_style)}. Detected "
        f"contribution type: {_style_label(detected)}. The draft {match_text} the intended type."
    )
    return "\n".join(lines)


def _style_label(style: PositioningStyle) -> str:
    names = {
        PositioningStyle.PER_PARAGRAPH: "contribution in each paragraph (1)",
        PositioningStyle.FINAL_PARAGRAPH: "contribution in the final paragraph (2)",
        PositioningStyle.NONE: "no contribution statement (3)",
    }
    return names[style]


def rule_based_feedback(report: EvaluationReport, expected_style: PositioningStyle) -> str:
    """Deterministic feedback assembled from report fields, no LLM involved."""
    items: list[str] = []
    if report.citation.missing_indices:
        items.append(
            f"Cite the missing papers {_fmt_indices(report.citation.missing_indices)}."
        )
    if report.citation.hallucinated_indices:
        items.append(
            "Remove citations to papers outside the provided list "
            f"{_fmt_indices(report.citation.hallucinated_indices)}."
        )
    if not report.length.passed:
        lower, upper = report.length.bounds
        direction = "Shorten" if report.length.draft_tokens > upper else "Extend"
        items.append(
            f"{direction} the draft to between {lower:g} and {upper:g} tokens "
            f"(currently {report.length.draft_tokens})."
        )
    off_target = sorted(
        index for index, ok in report.emphasis.per_citation_pass.items() if not ok
    )
    if off_target:
        items.append(
            f"Adjust the amount of content allocated to papers {_fmt_indices(off_target)}."
        )
    for pair in report.coherence.failing_pairs:
        items.append(
            f'Revise this sentence so it is supported by cited paper [{pair.citation_index}]: '
            f'"{pair.sentence}"'
        )
    if not report.type_match:
        items.append(
            f"Express the contribution as {_style_label(expected_style)} instead of "
            f"{_style_label(report.positioning.detected_type)}."
        )
    if not items:
        return (
            "All checks passed; maintain the current draft's citations, length, "
            "emphasis, and contribution style in the next iteration."
        )
    return " ".join(items)


def generate_feedback(
    report: EvaluationReport,
    feedback_llm: GeneratorHandle | None,
    expected_style: PositioningStyle,
) -> tuple[str, str]:
    """Turn a report into natural-language feedback.

    Returns (text, source) where source is "llm", "rule-based" (no LLM
    configured), or "fallback" (LLM configured but failed).
    """
    report_text = serialize_report(report, expected_style)
    if feedback_llm is None:
        return rule_based_feedback(report, expected_style), "rule-based"
    template = load_template("feedback")
    system, user = render_prompt(template, {"evaluation_report": report_text})
    try:
        text = feedback_llm.generate(system, user)
        if not text.strip():
            raise ValueError("empty feedback")
        return text.strip(), "llm"
    except Exception:
        return rule_based_feedback(report, expected_style), "fallback"


@dataclass
class IterationRecord:
    iteration: int
    draft: str
    report: EvaluationReport
    feedback: str | None
    feedback_source: str | None
    provided: tuple[int, ...]
    holdout: tuple[int, ...]
    expected_style: PositioningStyle


@dataclass
class RunTrace:
    generator: str
    paper_id: str
    scenario: str
    config: dict
    iterations: list[IterationRecord] = field(default_factory=list)
    truncated: bool = False
    error: str | None = None
    run_label: str = ""
    schema: str = TRACE_SCHEMA


def _draft_prompt(
    citation_set: CitationSet,
    state: ScenarioState,
    previous_draft: str | None,
    feedback: str | None,
) -> tuple[str, str]:
    subset: Mapping[int, PaperRecord] = {
        i: citation_set.cited[i] for i in state.provided
    }
    slots = {
        "contribution information": _STYLE_INSTRUCTIONS[state.expected_style],
        "main_title": citation_set.main.title,
        "main_abstract": citation_set.main.abstract,
        "main_introduction": citation_set.main.introduction,
        "cited_papers": build_cited_papers_block(subset),
    }
    if previous_draft is None:
        template = load_template("draft-first")
    else:
        template = load_template("draft-revise")
        slots["previous_draft"] = previous_draft
        slots["feedback"] = feedback or ""
    return render_prompt(template, slots)


def run(
    citation_set: CitationSet,
    generator: GeneratorHandle,
    judge: JudgeHandle,
    config: RunConfig,
    *,
    generator_name: str = "generator",
    feedback_llm: GeneratorHandle | None = None,
    run_label: str = "",
) -> RunTrace:
    """Drive the full generate-evaluate-feedback loop for one citation set."""
    trace = RunTrace(
        generator=generator_name,
        paper_id=citation_set.main.id,
        scenario=config.scenario,
        config=config.snapshot(),
        run_label=run_label,
    )
    previous_draft: str | None = None
    feedback: str | None = None
    for k in range(1, config.iterations + 1):
        state = apply_scenario(config, citation_set, k)
        system, user = _draft_prompt(citation_set, state, previous_draft, feedback)
        try:
            draft = generator.generate(system, user)
        except Exception as exc:
            trace.truncated = True
            trace.error = f"generator failed at iteration {k}: {exc}"
            break
        report = evaluate_draft(
            draft,
            citation_set,
            judge,
            provided=state.provided,
            expected_style=state.expected_style,
            tolerance=config.tolerance,
            iteration=k,
            concurrency=config.concurrency,
        )
        if k < config.iterations:
            feedback, source = generate_feedback(report, feedback_llm, state.expected_style)
        else:
            feedback, source = None, None
        trace.iterations.append(
            IterationRecord(
                iteration=k,
                draft=draft,
                report=report,
                feedback=feedback,
                feedback_source=source,
                provided=state.provided,
                holdout=state.holdout,
                expected_style=state.expected_style,
            )
        )
        previous_draft = draft
    return trace


DELTA_CRITERIA = (
    "coherence_ratio",
    "emphasis_mean",
    "positioning_ratio",
    "length_pass",
    "missing_pass",
    "hallucination_pass",
)


def _criterion_value(report: EvaluationReport, criterion: str) -> float:
    values = {
        "coherence_ratio": report.coherence.coherence_ratio,
        "emphasis_mean": report.emphasis.mean,
        "positioning_ratio": report.positioning.ratio,
        "length_pass": float(report.length.passed),
        "missing_pass": float(report.missing_pass),
        "hallucination_pass": float(report.hallucination_pass),
    }
    return values[criterion]


def improvement_deltas(trace: RunTrace) -> dict[str, list[float]]:
    """Signed score differences between consecutive iterations, per criterion."""
    if len(trace.iterations) < 2:
        raise ValidationError("improvement deltas need a trace with at least two iterations")
    deltas: dict[str, list[float]] = {c: [] for c in DELTA_CRITERIA}
    for earlier, later in zip(trace.iterations, trace.iterations[1:]):
        for criterion in DELTA_CRITERIA:
            deltas[criterion].append(
                _criterion_value(later.report, criterion)
                - _criterion_value(earlier.report, criterion)
            )
    return deltas


# --- trace persistence ------------------------------------------------------


def report_to_dict(report: EvaluationReport) -> dict:
    return {
        "iteration": report.iteration,
        "citation": {
            "missing_ratio": report.citation.missing_ratio,
            "hallucination_ratio": report.citation.hallucination_ratio,
            "missing_indices": sorted(report.citation.missing_indices),
            "hallucinated_indices": sorted(report.citation.hallucinated_indices),
        },
        "coherence": {
            "ratio": report.coherence.coherence_ratio,
            "passes": report.coherence.passes,
            "complete": report.coherence.complete,
            "skipped_indices": sorted(report.coherence.skipped_indices),
            "pairs": [
                {
                    "paragraph": p.paragraph_index,
                    "sentence_index": p.sentence_index,
                    "sentence": p.sentence,
                    "citation_index": p.citation_index,
                    "verdict": p.verdict,
                    "reasoning": p.reasoning,
                    "error": p.error,
                }
                for p in report.coherence.pair_results
            ],
        },
        "positioning": {
            "exists": report.positioning.exists,
            "detected_type": int(report.positioning.detected_type),
            "type_match": report.positioning.type_match,
            "per_paragraph": list(report.positioning.per_paragraph),
            "ratio": report.positioning.ratio,
            "reasoning": report.positioning.reasoning,
            "confident": report.positioning.confident,
            "complete": report.positioning.complete,
        },
        "length": {
            "draft_tokens": report.length.draft_tokens,
            "gold_tokens": report.length.gold_tokens,
            "tolerance": report.length.tolerance,
            "passed": report.length.passed,
        },
        "emphasis": {
            "per_citation_pass": {str(k): v for k, v in sorted(report.emphasis.per_citation_pass.items())},
            "mean": report.emphasis.mean,
        },
        "type_match": report.type_match,
        "justifications": report.justifications,
        "complete": report.complete,
    }


def report_from_dict(data: dict) -> EvaluationReport:
    citation = CitationVerification(
        missing_ratio=data["citation"]["missing_ratio"],
        hallucination_ratio=data["citation"]["hallucination_ratio"],
        missing_indices=frozenset(data["citation"]["missing_indices"]),
        hallucinated_indices=frozenset(data["citation"]["hallucinated_indices"]),
    )
    coherence_result = CoherenceResult(
        pair_results=tuple(
            CoherencePair(
                paragraph_index=p["paragraph"],
                sentence_index=p["sentence_index"],
                sentence=p["sentence"],
                citation_index=p["citation_index"],
                verdict=p["verdict"],
                reasoning=p["reasoning"],
                error=p["error"],
            )
            for p in data["coherence"]["pairs"]
        ),
        coherence_ratio=data["coherence"]["ratio"],
        passes=data["coherence"]["passes"],
        complete=data["coherence"]["complete"],
        skipped_indices=frozenset(data["coherence"]["skipped_indices"]),
    )
    positioning_result = PositioningResult(
        exists=data["positioning"]["exists"],
        detected_type=PositioningStyle(data["positioning"]["detected_type"]),
        type_match=data["positioning"]["type_match"],
        per_paragraph=tuple(data["positioning"]["per_paragraph"]),
        ratio=data["positioning"]["ratio"],
        reasoning=data["positioning"]["reasoning"],
        confident=data["positioning"]["confident"],
        complete=data["positioning"]["complete"],
    )
    return EvaluationReport(
        iteration=data["iteration"],
        citation=citation,
        coherence=coherence_result,
        positioning=positioning_result,
        length=LengthCheck(
            draft_tokens=data["length"]["draft_tokens"],
            gold_tokens=data["length"]["gold_tokens"],
            tolerance=data["length"]["tolerance"],
            passed=data["length"]["passed"],
        ),
        emphasis=EmphasisScore(
            per_citation_pass={int(k): v for k, v in data["emphasis"]["per_citation_pass"].items()},
            mean=data["emphasis"]["mean"],
        ),
        type_match=data["type_match"],
        justifications=dict(data["justifications"]),
        complete=data["complete"],
    )


def trace_to_dict(trace: RunTrace) -> dict:
    return {
        "schema": trace.schema,
        "generator": trace.generator,
        "paper_id": trace.paper_id,
        "scenario": trace.scenario,
        "config": trace.config,
        "run_label": trace.run_label,
        "truncated": trace.truncated,
        "error": trace.error,
        "iterations": [
            {
                "iteration": rec.iteration,
                "draft": rec.draft,
                "report": report_to_dict(rec.report),
                "feedback": rec.feedback,
                "feedback_source": rec.feedback_source,
                "provided": list(rec.provided),
                "holdout": list(rec.holdout),
                "expected_style": int(rec.expected_style),
            }
            for rec in trace.iterations
        ],
    }


def trace_from_dict(data: dict) -> RunTrace:
    if data.get("schema") != TRACE_SCHEMA:
        raise ValidationError(f"unsupported trace schema {data.get('schema')!r}")
    trace = RunTrace(
        generator=data["generator"],
        paper_id=data["paper_id"],
        scenario=data["scenario"],
        config=dict(data["config"]),
        run_label=data.get("run_label", ""),
        truncated=data.get("truncated", False),
        error=data.get("error"),
    )
    for rec in data["iterations"]:
        trace.iterations.append(
            IterationRecord(
                iteration=rec["iteration"],
                draft=rec["draft"],
                report=report_from_dict(rec["report"]),
                feedback=rec["feedback"],
                feedback_source=rec["feedback_source"],
                provided=tuple(rec["provided"]),
                holdout=tuple(rec["holdout"]),
                expected_style=PositioningStyle(rec["expected_style"]),
            )
        )
    return trace


def save_trace(trace: RunTrace, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(trace_to_dict(trace), indent=2, sort_keys=True, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )


def load_trace(path: str | Path) -> RunTrace:
    return trace_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
