from __future__ import annotations

import random

import pytest

from corpusgen import fixture_corpus
from rweval.errors import ValidationError
from rweval.figures import render_figures
from rweval.judge import StubGenerator, StubJudge
from rweval.pipeline import RunConfig, run
from rweval.reporting import (
    ALL_CRITERIA,
    PAPER_CRITERIA,
    ScoreCell,
    ScoreTable,
    aggregate,
    delta_table,
    export_csv,
    export_json,
    import_csv,
    import_json,
    report_scores,
)


def _traces(iterations=2, generator="stub", run_label=""):
    corpus = fixture_corpus()
    return [
        run(
            cs,
            StubGenerator(),
            StubJudge(default="yes"),
            RunConfig(iterations=iterations),
            generator_name=generator,
            run_label=run_label,
        )
        for cs in corpus
    ]


def test_report_scores_keys(corpus):
    from rweval.pipeline import evaluate_draft

    report = evaluate_draft(
        corpus[0].gold_related_work, corpus[0], StubJudge(default="yes")
    )
    scores = report_scores(report)
    assert set(scores) == set(ALL_CRITERIA)
    assert scores["missing_papers"] == 1.0
    assert scores["coherence"] == 1.0
    assert scores["coherence_ratio"] == 1.0


def test_aggregate_single_trace_identity():
    (trace,) = _traces(iterations=2)[:1]
    table = aggregate([trace])
    for criterion in ALL_CRITERIA:
        for iteration in (1, 2):
            expected = report_scores(trace.iterations[iteration - 1].report)[criterion]
            cell = table.cell("stub", criterion, iteration)
            assert cell.mean == pytest.approx(expected)
            assert cell.std is None  # single run: empty std


def test_aggregate_mean_over_traces():
    traces = _traces(iterations=2)
    # degrade one trace's hallucination pass at iteration 1
    traces[0].iterations[0].report.citation.__dict__["hallucination_ratio"] = 0.5
    table = aggregate(traces)
    assert table.cell("stub", "hallucinated_papers", 1).mean == pytest.approx(2 / 3)


def test_aggregate_permutation_invariant():
    traces = _traces(iterations=3)
    rng = random.Random(0)
    shuffled = traces[:]
    rng.shuffle(shuffled)
    assert aggregate(traces).rows == aggregate(shuffled).rows


def test_aggregate_mixed_k_rejected():
    short = _traces(iterations=2)
    long = _traces(iterations=3)
    with pytest.raises(ValidationError):
        aggregate(short + long)


def test_aggregate_empty_rejected():
    with pytest.raises(ValidationError):
        aggregate([])


def test_aggregate_std_across_runs():
    first = _traces(iterations=2, run_label="r1")
    second = _traces(iterations=2, run_label="r2")
    second[0].iterations[0].report.citation.__dict__["missing_ratio"] = 0.5
    table = aggregate(first + second)
    cell = table.cell("stub", "missing_papers", 1)
    # run means: r1 -> 0/3 fail ... all pass -> 1.0; r2 -> 2/3
    assert cell.mean == pytest.approx((3 + 2) / 6)
    assert cell.std == pytest.approx(abs(1.0 - 2 / 3) / 2)


def test_paper_criteria_shape():
    traces = _traces(iterations=5)
    table = aggregate(traces)
    cells = [
        (criterion, iteration)
        for criterion in PAPER_CRITERIA
        for iteration in table.iterations
        if ("stub", criterion, iteration) in table.rows
    ]
    assert len(cells) == 8 * 5


def test_csv_roundtrip(tmp_path):
    table = aggregate(_traces(iterations=3))
    path = tmp_path / "scores.csv"
    export_csv(table, path)
    again = import_csv(path)
    assert set(again.rows) == set(table.rows)
    for key, cell in table.rows.items():
        assert again.rows[key].mean == pytest.approx(cell.mean, abs=5e-7)
        assert (again.rows[key].std is None) == (cell.std is None)
    header = path.read_text().splitlines()[0]
    assert header == "generator,criterion,iteration,mean,std"


def test_json_roundtrip(tmp_path):
    table = aggregate(_traces(iterations=2))
    path = tmp_path / "scores.json"
    export_json(table, path)
    again = import_json(path)
    assert set(again.rows) == set(table.rows)


def test_delta_table_has_k_minus_one_columns(tmp_path):
    traces = _traces(iterations=5)
    deltas = delta_table(traces)
    assert deltas.iterations == (2, 3, 4, 5)
    export_csv(deltas, tmp_path / "deltas.csv")
    rows = (tmp_path / "deltas.csv").read_text().splitlines()[1:]
    assert all(int(line.split(",")[2]) >= 2 for line in rows)


def test_delta_table_needs_two_iterations():
    with pytest.raises(ValidationError):
        delta_table(_traces(iterations=1))


def test_import_rejects_unknown_columns(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b\n1,2\n", encoding="utf-8")
    with pytest.raises(ValidationError):
        import_csv(path)


def test_render_figures_writes_pngs(tmp_path):
    table = aggregate(_traces(iterations=3))
    written = render_figures(table, tmp_path / "figs")
    assert len(written) == len(PAPER_CRITERIA)
    for path in written:
        assert path.exists()
        assert path.stat().st_size > 0


def test_render_figures_subset(tmp_path):
    table = ScoreTable(
        {("g", "coherence", 1): ScoreCell(0.5), ("g", "coherence", 2): ScoreCell(0.7, 0.1)}
    )
    written = render_figures(table, tmp_path / "figs", criteria=("coherence",))
    assert [p.name for p in written] == ["coherence.png"]
