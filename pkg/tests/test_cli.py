from __future__ import annotations

import json

from corpusgen import fixture_corpus, synth_citation_set
from rweval.cli import main
from rweval.corpus import save_corpus
from rweval.pipeline import load_trace


def _write_corpus(tmp_path, sets=None):
    path = tmp_path / "corpus.json"
    save_corpus(sets if sets is not None else fixture_corpus(), path)
    return path


def test_validate_ok(tmp_path, capsys):
    path = _write_corpus(tmp_path)
    assert main(["validate", "--corpus", str(path)]) == 0
    out = capsys.readouterr().out
    assert "P1" in out and "3 papers" in out


def test_validate_broken_corpus_exit_1(tmp_path, capsys):
    path = tmp_path / "corpus.json"
    payload = json.loads(_write_corpus(tmp_path).read_text())
    payload[0]["main"]["related_work"] = "Cites [9] which does not exist."
    path.write_text(json.dumps(payload), encoding="utf-8")
    assert main(["validate", "--corpus", str(path)]) == 1
    assert "P1" in capsys.readouterr().out


def test_validate_empty_corpus_warns(tmp_path, capsys):
    path = tmp_path / "corpus.json"
    path.write_text("[]", encoding="utf-8")
    assert main(["validate", "--corpus", str(path)]) == 0
    assert "zero papers" in capsys.readouterr().out


def test_run_stub_writes_traces_and_scores(tmp_path):
    corpus = [synth_citation_set("A1", 3), synth_citation_set("A2", 4)]
    path = _write_corpus(tmp_path, corpus)
    results = tmp_path / "results"
    code = main(
        [
            "run",
            "--corpus", str(path),
            "--results", str(results),
            "--iterations", "1",
            "--stub",
            "--no-figures",
        ]
    )
    assert code == 0
    traces = sorted((results / "traces").glob("*.json"))
    assert [t.name for t in traces] == [
        "stub__A1__full.json",
        "stub__A2__full.json",
    ]
    assert (results / "scores.csv").exists()

    # deterministic across repeats
    first = traces[0].read_bytes()
    results2 = tmp_path / "results2"
    main(
        [
            "run",
            "--corpus", str(path),
            "--results", str(results2),
            "--iterations", "1",
            "--stub",
            "--no-figures",
        ]
    )
    assert (results2 / "traces" / "stub__A1__full.json").read_bytes() == first


def test_run_scenario_recorded_in_trace(tmp_path):
    corpus = [synth_citation_set("B1", 12)]
    path = _write_corpus(tmp_path, corpus)
    results = tmp_path / "results"
    code = main(
        [
            "run",
            "--corpus", str(path),
            "--results", str(results),
            "--iterations", "3",
            "--scenario", "new-paper",
            "--stub",
            "--no-figures",
        ]
    )
    assert code == 0
    trace = load_trace(results / "traces" / "stub__B1__new-paper.json")
    assert trace.iterations[0].holdout == (10, 11, 12)
    assert trace.iterations[2].holdout == ()
    assert trace.config["scenario"] == "new-paper"


def test_run_style_change_logged(tmp_path):
    path = _write_corpus(tmp_path, [synth_citation_set("C1", 3)])
    results = tmp_path / "results"
    main(
        [
            "run",
            "--corpus", str(path),
            "--results", str(results),
            "--iterations", "3",
            "--scenario", "style-change",
            "--stub",
            "--no-figures",
        ]
    )
    trace = load_trace(results / "traces" / "stub__C1__style-change.json")
    assert [int(rec.expected_style) for rec in trace.iterations] == [1, 1, 2]


def test_run_without_backends_is_configuration_error(tmp_path, capsys):
    path = _write_corpus(tmp_path)
    code = main(
        ["run", "--corpus", str(path), "--results", str(tmp_path / "r"), "--iterations", "1"]
    )
    assert code == 2
    assert "configuration error" in capsys.readouterr().err


def test_run_unreachable_endpoint_exit_3(tmp_path, capsys):
    path = _write_corpus(tmp_path)
    code = main(
        [
            "run",
            "--corpus", str(path),
            "--results", str(tmp_path / "r"),
            "--iterations", "1",
            "--judge-endpoint", "http://127.0.0.1:9/v1",
            "--judge-model", "m",
        ]
    )
    assert code == 3
    assert "transport error" in capsys.readouterr().err


def test_eval_gold_draft_passes(tmp_path, capsys):
    path = _write_corpus(tmp_path)
    draft = tmp_path / "draft.txt"
    draft.write_text(fixture_corpus()[0].gold_related_work, encoding="utf-8")
    out = tmp_path / "report.json"
    code = main(
        [
            "eval",
            "--corpus", str(path),
            "--paper", "P1",
            "--draft", str(draft),
            "--out", str(out),
            "--stub",
        ]
    )
    assert code == 0
    payload = json.loads(out.read_text())
    assert payload["citation"]["missing_ratio"] == 0.0
    assert payload["emphasis"]["mean"] == 1.0
    assert payload["length"]["passed"] is True


def test_eval_hallucinated_citation_listed(tmp_path):
    path = _write_corpus(tmp_path)
    draft = tmp_path / "draft.txt"
    draft.write_text("Known [1] and invented [99] appear.", encoding="utf-8")
    out = tmp_path / "report.json"
    main(
        [
            "eval",
            "--corpus", str(path),
            "--paper", "P1",
            "--draft", str(draft),
            "--out", str(out),
            "--stub",
        ]
    )
    payload = json.loads(out.read_text())
    assert payload["citation"]["hallucinated_indices"] == [99]


def test_eval_empty_draft(tmp_path):
    path = _write_corpus(tmp_path)
    draft = tmp_path / "draft.txt"
    draft.write_text("", encoding="utf-8")
    out = tmp_path / "report.json"
    code = main(
        [
            "eval",
            "--corpus", str(path),
            "--paper", "P1",
            "--draft", str(draft),
            "--out", str(out),
            "--stub",
        ]
    )
    assert code == 0
    payload = json.loads(out.read_text())
    assert payload["citation"]["missing_ratio"] == 1.0
    assert payload["length"]["passed"] is False


def test_eval_unknown_paper_exit_2(tmp_path, capsys):
    path = _write_corpus(tmp_path)
    draft = tmp_path / "draft.txt"
    draft.write_text("x", encoding="utf-8")
    code = main(
        ["eval", "--corpus", str(path), "--paper", "NOPE", "--draft", str(draft), "--stub"]
    )
    assert code == 2


def test_report_command(tmp_path):
    path = _write_corpus(tmp_path)
    results = tmp_path / "results"
    main(
        [
            "run",
            "--corpus", str(path),
            "--results", str(results),
            "--iterations", "2",
            "--stub",
            "--no-figures",
        ]
    )
    out = tmp_path / "report"
    code = main(
        [
            "report",
            "--traces", str(results / "traces"),
            "--out", str(out),
            "--deltas",
            "--no-figures",
        ]
    )
    assert code == 0
    assert (out / "scores.csv").exists()
    assert (out / "deltas.csv").exists()


def test_report_no_traces_exit_1(tmp_path):
    code = main(
        ["report", "--traces", str(tmp_path), "--out", str(tmp_path / "o"), "--no-figures"]
    )
    assert code == 1
