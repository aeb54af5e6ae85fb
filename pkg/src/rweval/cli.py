"""Operator command line: validate corpora, run pipelines, evaluate drafts,
serve the arena, and export report tables with figures.

Exit codes: 0 success, 1 validation failure, 2 configuration problem,
3 transport failure. Secrets travel only via environment variables; all
randomness flows from --seed and is recorded in outputs.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import corpus as corpus_mod
from . import pipeline as pipeline_mod
from . import reporting
from .errors import (
    ConfigurationError,
    CorpusParseError,
    JudgeUnavailableError,
    TemplateError,
    TransportError,
    ValidationError,
)
from .judge.client import (
    ChatGenerator,
    EndpointConfig,
    HttpJudge,
    JudgeConfig,
    check_reachable,
)
from .judge.stub import StubGenerator, StubJudge
from .metrics.hard import PositioningStyle

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_CONFIGURATION = 2
EXIT_TRANSPORT = 3

_STYLE_BY_NAME = {
    "per-paragraph": PositioningStyle.PER_PARAGRAPH,
    "final-paragraph": PositioningStyle.FINAL_PARAGRAPH,
}


def _setting(args: argparse.Namespace, name: str, file_config: dict, default=None):
    """Resolution order: flag > environment variable > config file > default."""
    value = getattr(args, name.replace("-", "_"), None)
    if value is not None:
        return value
    env = os.environ.get("RWEVAL_" + name.replace("-", "_").upper())
    if env is not None:
        return env
    if name in file_config:
        return file_config[name]
    return default


def _load_file_config(args: argparse.Namespace) -> dict:
    path = getattr(args, "config", None)
    if not path:
        return {}
    return json.loads(Path(path).read_text(encoding="utf-8"))


def _build_backends(args: argparse.Namespace):
    """Judge, generator, and feedback handles per the --stub / endpoint flags."""
    file_config = _load_file_config(args)
    if args.stub:
        judge = StubJudge(default="yes")
        generator = StubGenerator()
        name = _setting(args, "generator-name", file_config, "stub")
        return judge, generator, None, name

    judge_endpoint = _setting(args, "judge-endpoint", file_config)
    judge_model = _setting(args, "judge-model", file_config)
    gen_endpoint = _setting(args, "generator-endpoint", file_config, judge_endpoint)
    gen_model = _setting(args, "generator-model", file_config, judge_model)
    if not judge_endpoint or not judge_model:
        raise ConfigurationError(
            "need --judge-endpoint and --judge-model (or --stub for offline runs)"
        )
    for endpoint in {judge_endpoint, gen_endpoint}:
        check_reachable(endpoint)
    judge = HttpJudge(
        JudgeConfig(
            endpoint=judge_endpoint,
            model=judge_model,
            temperature=float(_setting(args, "temperature", file_config, 0.8)),
            repetitions=int(_setting(args, "repetitions", file_config, 3)),
            concurrency_limit=int(_setting(args, "concurrency", file_config, 4)),
        )
    )
    generator = ChatGenerator(EndpointConfig(endpoint=gen_endpoint, model=gen_model))
    feedback_endpoint = _setting(args, "feedback-endpoint", file_config, judge_endpoint)
    feedback_model = _setting(args, "feedback-model", file_config, judge_model)
    feedback = ChatGenerator(EndpointConfig(endpoint=feedback_endpoint, model=feedback_model))
    name = _setting(args, "generator-name", file_config, gen_model)
    return judge, generator, feedback, name


def cmd_validate(args: argparse.Namespace) -> int:
    try:
        sets = corpus_mod.load_corpus(args.corpus)
    except (CorpusParseError, ValidationError) as exc:
        print(f"FAIL: {exc}")
        return EXIT_VALIDATION
    stats = corpus_mod.corpus_stats(sets)
    if stats.paper_count == 0:
        print("WARNING: corpus is empty (zero papers)")
        return EXIT_OK
    for cs in sets:
        print(f"ok    {cs.main.id}  ({len(cs.cited)} cited papers)")
    print(
        f"{stats.paper_count} papers, {stats.total_citations} citations, "
        f"mean {stats.mean_citations_per_paper:.2f} per paper"
    )
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    sets = corpus_mod.load_corpus(args.corpus)
    cs = corpus_mod.find_paper(sets, args.paper)
    draft_text = Path(args.draft).read_text(encoding="utf-8")
    judge, _, _, _ = _build_backends(args)
    report = pipeline_mod.evaluate_draft(
        draft_text,
        cs,
        judge,
        expected_style=_STYLE_BY_NAME[args.expected_style],
        tolerance=args.tolerance,
    )
    payload = pipeline_mod.report_to_dict(report)
    out = Path(args.out) if args.out else Path(f"{args.paper}.report.json")
    out.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    for criterion, value in reporting.report_scores(report).items():
        print(f"{criterion:24s} {value:.3f}")
    print(f"report written to {out}")
    return EXIT_OK


def _run_one(cs, judge, generator, feedback, name, config, results_dir, run_label):
    trace = pipeline_mod.run(
        cs,
        generator,
        judge,
        config,
        generator_name=name,
        feedback_llm=feedback,
        run_label=run_label,
    )
    stem = f"{name}__{cs.main.id}__{config.scenario}"
    if run_label:
        stem += f"__{run_label}"
    path = results_dir / "traces" / f"{stem}.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    pipeline_mod.save_trace(trace, path)
    for record in trace.iterations:
        scores = reporting.report_scores(record.report)
        print(
            f"{cs.main.id} iter {record.iteration}: "
            f"missing={scores['missing_papers']:.0f} "
            f"halluc={scores['hallucinated_papers']:.0f} "
            f"coh={scores['coherence_ratio']:.2f} "
            f"len={scores['length']:.0f} emph={scores['citation_emphasis']:.2f}"
        )
    return trace


def cmd_run(args: argparse.Namespace) -> int:
    sets = corpus_mod.load_corpus(args.corpus)
    if args.papers:
        wanted = [p.strip() for p in args.papers.split(",") if p.strip()]
        sets = [corpus_mod.find_paper(sets, pid) for pid in wanted]
    if not sets:
        raise ValidationError("no papers selected")
    judge, generator, feedback, name = _build_backends(args)
    config = pipeline_mod.RunConfig(
        iterations=args.iterations,
        scenario=args.scenario,
        expected_style=_STYLE_BY_NAME[args.expected_style],
        tolerance=args.tolerance,
        intervention_iteration=args.intervention_iteration,
        holdout_fraction=args.holdout_fraction,
        seed=args.seed,
    )
    results_dir = Path(args.results)
    results_dir.mkdir(parents=True, exist_ok=True)

    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            traces = list(
                pool.map(
                    lambda cs: _run_one(
                        cs, judge, generator, feedback, name, config, results_dir, args.run_label
                    ),
                    sets,
                )
            )
    else:
        traces = [
            _run_one(cs, judge, generator, feedback, name, config, results_dir, args.run_label)
            for cs in sets
        ]

    usable = [t for t in traces if t.iterations and not t.truncated]
    if usable:
        table = reporting.aggregate(usable)
        reporting.export_csv(table, results_dir / "scores.csv")
        print(f"score table written to {results_dir / 'scores.csv'}")
        if not args.no_figures:
            from .figures import render_figures

            written = render_figures(table, results_dir / "figures")
            print(f"{len(written)} figures written to {results_dir / 'figures'}")
    truncated = [t for t in traces if t.truncated]
    if truncated:
        for t in truncated:
            print(f"WARNING: trace for {t.paper_id} truncated: {t.error}")
        return EXIT_VALIDATION
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    trace_paths = sorted(Path(args.traces).glob("*.json"))
    if not trace_paths:
        raise ValidationError(f"no trace files found under {args.traces}")
    traces = [pipeline_mod.load_trace(p) for p in trace_paths]
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    table = reporting.aggregate(traces)
    if args.format == "json":
        reporting.export_json(table, out_dir / "scores.json")
    else:
        reporting.export_csv(table, out_dir / "scores.csv")
    if args.deltas:
        deltas = reporting.delta_table(traces)
        reporting.export_csv(deltas, out_dir / "deltas.csv")
    if not args.no_figures:
        from .figures import render_figures

        render_figures(table, out_dir / "figures")
    print(f"report written to {out_dir}")
    return EXIT_OK


def cmd_arena(args: argparse.Namespace) -> int:
    from .arena.service import serve

    serve(args.log, args.corpus, host=args.host, port=args.port, seed=args.seed)
    return EXIT_OK


def _add_backend_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--stub", action="store_true", help="offline deterministic backends")
    parser.add_argument("--judge-endpoint")
    parser.add_argument("--judge-model")
    parser.add_argument("--generator-endpoint")
    parser.add_argument("--generator-model")
    parser.add_argument("--feedback-endpoint")
    parser.add_argument("--feedback-model")
    parser.add_argument("--generator-name")
    parser.add_argument("--temperature", type=float)
    parser.add_argument("--repetitions", type=int)
    parser.add_argument("--concurrency", type=int)
    parser.add_argument("--config", help="JSON config file mirroring the flags")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rweval")
    sub = parser.add_subparsers(dest="command", required=True)

    p_validate = sub.add_parser("validate", help="validate a corpus file")
    p_validate.add_argument("--corpus", required=True)
    p_validate.set_defaults(func=cmd_validate)

    p_eval = sub.add_parser("eval", help="evaluate a single draft file")
    p_eval.add_argument("--corpus", required=True)
    p_eval.add_argument("--paper", required=True)
    p_eval.add_argument("--draft", required=True)
    p_eval.add_argument("--out")
    p_eval.add_argument(
        "--expected-style", choices=sorted(_STYLE_BY_NAME), default="per-paragraph"
    )
    p_eval.add_argument("--tolerance", type=float, default=0.25)
    _add_backend_flags(p_eval)
    p_eval.set_defaults(func=cmd_eval)

    p_run = sub.add_parser("run", help="run the iterative pipeline over a corpus")
    p_run.add_argument("--corpus", required=True)
    p_run.add_argument("--results", required=True)
    p_run.add_argument("--papers", help="comma-separated paper ids (default: all)")
    p_run.add_argument("--iterations", type=int, default=5)
    p_run.add_argument("--scenario", choices=pipeline_mod.SCENARIOS, default="full")
    p_run.add_argument(
        "--expected-style", choices=sorted(_STYLE_BY_NAME), default="per-paragraph"
    )
    p_run.add_argument("--tolerance", type=float, default=0.25)
    p_run.add_argument("--intervention-iteration", type=int, default=3)
    p_run.add_argument("--holdout-fraction", type=float, default=0.25)
    p_run.add_argument("--seed", type=int, default=0)
    p_run.add_argument("--jobs", type=int, default=1)
    p_run.add_argument("--run-label", default="")
    p_run.add_argument("--no-figures", action="store_true")
    _add_backend_flags(p_run)
    p_run.set_defaults(func=cmd_run)

    p_report = sub.add_parser("report", help="aggregate trace files into tables and figures")
    p_report.add_argument("--traces", required=True, help="directory of trace JSON files")
    p_report.add_argument("--out", required=True)
    p_report.add_argument("--format", choices=("csv", "json"), default="csv")
    p_report.add_argument("--deltas", action="store_true")
    p_report.add_argument("--no-figures", action="store_true")
    p_report.set_defaults(func=cmd_report)

    p_arena = sub.add_parser("arena", help="serve the expert arena HTTP API")
    p_arena.add_argument("--log", required=True, help="event log file")
    p_arena.add_argument("--corpus", required=True)
    p_arena.add_argument("--host", default="127.0.0.1")
    p_arena.add_argument("--port", type=int, default=8321)
    p_arena.add_argument("--seed", type=int, default=0)
    p_arena.set_defaults(func=cmd_arena)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CorpusParseError, ValidationError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ConfigurationError, TemplateError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIGURATION
    except (TransportError, JudgeUnavailableError) as exc:
        print(f"transport error: {exc}", file=sys.stderr)
        return EXIT_TRANSPORT


if __name__ == "__main__":
    sys.exit(main())
