from __future__ import annotations

import json

import pytest

from corpusgen import synth_citation_set
from rweval.errors import ConfigurationError, ValidationError
from rweval.judge import StubGenerator, StubJudge
from rweval.metrics import PositioningStyle
from rweval.pipeline import (
    RunConfig,
    apply_scenario,
    evaluate_draft,
    generate_feedback,
    improvement_deltas,
    load_trace,
    rule_based_feedback,
    run,
    save_trace,
    serialize_report,
    trace_to_dict,
)


class FixedGenerator:
    def __init__(self, text: str):
        self.text = text

    def generate(self, system: str, user: str) -> str:
        return self.text


class GoldEcho:
    def __init__(self, cs):
        self.cs = cs

    def generate(self, system: str, user: str) -> str:
        return self.cs.gold_related_work


class ExplodingGenerator:
    def __init__(self, fail_at: int):
        self.fail_at = fail_at
        self.calls = 0

    def generate(self, system: str, user: str) -> str:
        self.calls += 1
        if self.calls >= self.fail_at:
            raise RuntimeError("backend gone")
        return "Filler [1] text.\n\nOur contribution differs."


# --- scenarios ----------------------------------------------------------------


def test_full_scenario_is_identity(corpus):
    config = RunConfig(iterations=5, scenario="full")
    for k in range(1, 6):
        state = apply_scenario(config, corpus[2], k)
        assert state.provided == corpus[2].indices
        assert state.holdout == ()
        assert state.expected_style == config.expected_style


def test_new_paper_holdout_trigger(twelve_paper_set):
    config = RunConfig(iterations=5, scenario="new-paper")
    for k in (1, 2):
        state = apply_scenario(config, twelve_paper_set, k)
        assert state.provided == tuple(range(1, 10))
        assert state.holdout == (10, 11, 12)
    for k in (3, 4, 5):
        state = apply_scenario(config, twelve_paper_set, k)
        assert state.provided == tuple(range(1, 13))
        assert state.holdout == ()


def test_new_paper_rounding_half_away():
    config = RunConfig(iterations=5, scenario="new-paper")
    fourteen = synth_citation_set("P14", 14)
    state = apply_scenario(config, fourteen, 1)
    assert len(state.holdout) == 4  # 3.5 rounds away from zero
    ten = synth_citation_set("P10", 10)
    state = apply_scenario(config, ten, 1)
    assert len(state.holdout) == 3  # 2.5 rounds away from zero


def test_new_paper_holdout_cannot_remove_everything():
    config = RunConfig(iterations=5, scenario="new-paper", holdout_fraction=0.9)
    single = synth_citation_set("P1b", 1)
    with pytest.raises(ValidationError):
        apply_scenario(config, single, 1)


def test_style_change_flips_at_intervention(corpus):
    config = RunConfig(
        iterations=5,
        scenario="style-change",
        expected_style=PositioningStyle.PER_PARAGRAPH,
    )
    styles = [apply_scenario(config, corpus[0], k).expected_style for k in range(1, 6)]
    assert styles == [
        PositioningStyle.PER_PARAGRAPH,
        PositioningStyle.PER_PARAGRAPH,
        PositioningStyle.FINAL_PARAGRAPH,
        PositioningStyle.FINAL_PARAGRAPH,
        PositioningStyle.FINAL_PARAGRAPH,
    ]


def test_run_config_validation():
    with pytest.raises(ConfigurationError):
        RunConfig(iterations=0)
    with pytest.raises(ConfigurationError):
        RunConfig(scenario="bogus")
    with pytest.raises(ConfigurationError):
        RunConfig(intervention_iteration=9, iterations=5, scenario="new-paper")
    with pytest.raises(ConfigurationError):
        RunConfig(holdout_fraction=1.5)
    # the intervention bound only binds in dynamic scenarios
    assert RunConfig(intervention_iteration=9, iterations=5).iterations == 5


# --- run loop ------------------------------------------------------------------


def test_run_shapes_and_feedback_boundaries(corpus):
    cs = corpus[0]
    trace = run(
        cs,
        StubGenerator(),
        StubJudge(default="yes"),
        RunConfig(iterations=5),
        generator_name="stub",
    )
    assert len(trace.iterations) == 5
    feedbacks = [rec.feedback for rec in trace.iterations]
    assert all(f is not None for f in feedbacks[:4])
    assert feedbacks[4] is None
    assert [rec.report.iteration for rec in trace.iterations] == [1, 2, 3, 4, 5]


def test_run_single_iteration_no_feedback(corpus):
    trace = run(
        corpus[0], StubGenerator(), StubJudge(default="yes"), RunConfig(iterations=1)
    )
    assert len(trace.iterations) == 1
    assert trace.iterations[0].feedback is None


def test_gold_echo_self_identity(corpus):
    for cs in corpus:
        trace = run(
            cs, GoldEcho(cs), StubJudge(default="yes"), RunConfig(iterations=1)
        )
        report = trace.iterations[0].report
        assert report.citation.missing_ratio == 0.0
        assert report.citation.hallucination_ratio == 0.0
        assert report.length.passed
        assert report.emphasis.mean == 1.0


def test_generator_failure_truncates_trace(corpus):
    generator = ExplodingGenerator(fail_at=3)
    trace = run(
        corpus[0], generator, StubJudge(default="yes"), RunConfig(iterations=5)
    )
    assert trace.truncated
    assert len(trace.iterations) == 2
    assert "iteration 3" in trace.error


def test_run_deterministic_with_stubs(corpus):
    def one_trace():
        return run(
            corpus[1],
            StubGenerator(),
            StubJudge(default="yes"),
            RunConfig(iterations=3),
            generator_name="stub",
        )

    assert trace_to_dict(one_trace()) == trace_to_dict(one_trace())


def test_new_paper_missing_membership(twelve_paper_set):
    # a generator stuck on the first nine papers: held-out papers become
    # missing exactly when they are reintroduced
    nine_draft = " ".join(f"Work [{k}] matters." for k in range(1, 10))
    nine_draft += "\n\nOur contribution differs from the works above."
    config = RunConfig(iterations=4, scenario="new-paper")
    trace = run(
        twelve_paper_set, FixedGenerator(nine_draft), StubJudge(default="yes"), config
    )
    missing_per_iter = [
        sorted(rec.report.citation.missing_indices) for rec in trace.iterations
    ]
    assert missing_per_iter == [[], [], [10, 11, 12], [10, 11, 12]]
    assert [rec.holdout for rec in trace.iterations] == [
        (10, 11, 12),
        (10, 11, 12),
        (),
        (),
    ]


def test_new_paper_heldout_cited_counts_hallucinated(twelve_paper_set):
    # citing a held-out paper before the intervention is a hallucination
    twelve_draft = " ".join(f"Work [{k}] matters." for k in range(1, 13))
    config = RunConfig(iterations=3, scenario="new-paper")
    trace = run(
        twelve_paper_set, FixedGenerator(twelve_draft), StubJudge(default="yes"), config
    )
    assert sorted(trace.iterations[0].report.citation.hallucinated_indices) == [10, 11, 12]
    assert trace.iterations[2].report.citation.hallucinated_indices == frozenset()


# --- feedback -----------------------------------------------------------------


def _report_with_missing(corpus):
    cs = corpus[1]
    draft = "Only work [1] appears here. Nothing else is cited.\n\nOur approach differs."
    return evaluate_draft(draft, cs, StubJudge(default="yes")), cs


def test_serialized_report_lists_missing(corpus):
    report, _ = _report_with_missing(corpus)
    text = serialize_report(report, PositioningStyle.PER_PARAGRAPH)
    assert "[2, 3, 4]" in text
    single = evaluate_draft(
        "Work [1] and [2] and [3] appear. Ours differs.", corpus[1], StubJudge(default="yes")
    )
    assert "[4]" in serialize_report(single, PositioningStyle.PER_PARAGRAPH)
    assert text.splitlines()[0].startswith("1. Missing papers:")
    assert "2. Length:" in text
    assert "3. Citation emphasis:" in text
    assert "4. Sentences lacking coherence:" in text
    assert "5. Intended contribution type:" in text


def test_serialized_report_contains_incoherent_sentences(corpus):
    from test_metrics_hard import coherence_fingerprint  # reuse scripted helper
    from rweval.textops import segment

    cs = corpus[0]
    draft_text = cs.gold_related_work
    sentence = segment(draft_text).paragraphs[0].sentences[0]
    fp = coherence_fingerprint(cs, sentence.text, sentence.cited_indices[0])
    judge = StubJudge(script={fp: "no"}, default="yes")
    report = evaluate_draft(draft_text, cs, judge)
    text = serialize_report(report, PositioningStyle.PER_PARAGRAPH)
    assert sentence.text in text


def test_rule_based_feedback_perfect_report(corpus):
    cs = corpus[0]
    report = evaluate_draft(cs.gold_related_work, cs, StubJudge(default="yes"))
    text = rule_based_feedback(report, PositioningStyle.PER_PARAGRAPH)
    assert "maintain the current draft" in text.lower()


def test_generate_feedback_without_llm_is_rule_based(corpus):
    report, _ = _report_with_missing(corpus)
    text, source = generate_feedback(report, None, PositioningStyle.PER_PARAGRAPH)
    assert source == "rule-based"
    assert "[2, 3, 4]" in text


def test_generate_feedback_llm_failure_falls_back(corpus):
    class BrokenLLM:
        def generate(self, system, user):
            raise RuntimeError("llm down")

    report, _ = _report_with_missing(corpus)
    text, source = generate_feedback(report, BrokenLLM(), PositioningStyle.PER_PARAGRAPH)
    assert source == "fallback"
    assert text


def test_generate_feedback_llm_receives_report(corpus):
    captured = {}

    class EchoLLM:
        def generate(self, system, user):
            captured["user"] = user
            return "Short feedback."

    report, _ = _report_with_missing(corpus)
    text, source = generate_feedback(report, EchoLLM(), PositioningStyle.PER_PARAGRAPH)
    assert source == "llm"
    assert text == "Short feedback."
    assert captured["user"].startswith("EVALUATION REPORT:")
    assert "[2, 3, 4]" in captured["user"]


# --- deltas and persistence -----------------------------------------------------


def test_improvement_deltas_counts(corpus):
    trace = run(
        corpus[0], StubGenerator(), StubJudge(default="yes"), RunConfig(iterations=5)
    )
    deltas = improvement_deltas(trace)
    assert set(deltas) == {
        "coherence_ratio",
        "emphasis_mean",
        "positioning_ratio",
        "length_pass",
        "missing_pass",
        "hallucination_pass",
    }
    for series in deltas.values():
        assert len(series) == 4
    # constant stub scores: all deltas zero
    assert all(v == 0.0 for series in deltas.values() for v in series)


def test_improvement_deltas_need_two_iterations(corpus):
    trace = run(
        corpus[0], StubGenerator(), StubJudge(default="yes"), RunConfig(iterations=1)
    )
    with pytest.raises(ValidationError):
        improvement_deltas(trace)


def test_trace_roundtrip(tmp_path, corpus):
    trace = run(
        corpus[0],
        StubGenerator(),
        StubJudge(default="yes"),
        RunConfig(iterations=3, scenario="style-change"),
        generator_name="stub",
    )
    path = tmp_path / "trace.json"
    save_trace(trace, path)
    again = load_trace(path)
    assert trace_to_dict(again) == trace_to_dict(trace)
    payload = json.loads(path.read_text())
    assert payload["schema"] == "rweval.trace/1"
    assert payload["config"]["scenario"] == "style-change"


def test_trace_rejects_unknown_schema(tmp_path, corpus):
    trace = run(
        corpus[0], StubGenerator(), StubJudge(default="yes"), RunConfig(iterations=1)
    )
    path = tmp_path / "trace.json"
    save_trace(trace, path)
    payload = json.loads(path.read_text())
    payload["schema"] = "other/9"
    path.write_text(json.dumps(payload))
    with pytest.raises(ValidationError):
        load_trace(path)


# --- single-draft evaluation edge cases ----------------------------------------


def test_evaluate_empty_draft(corpus):
    report = evaluate_draft("", corpus[0], StubJudge(default="yes"))
    assert report.citation.missing_ratio == 1.0
    assert not report.length.passed
    assert not report.positioning.exists
    assert report.emphasis.mean == 0.0


def test_evaluate_hallucinated_index_listed(corpus):
    report = evaluate_draft(
        "Known [1] and unknown [99] appear. Our approach differs.",
        corpus[0],
        StubJudge(default="yes"),
    )
    assert 99 in report.citation.hallucinated_indices
