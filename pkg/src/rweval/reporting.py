"""Aggregate run traces into per-criterion, per-iteration score tables.

Coherence and positioning ratio are emitted in two views: the hard view
(fraction of drafts passing with a perfect ratio) under the canonical
criterion name, and the soft trajectory view (mean ratio) under a `_ratio`
suffixed name. The canonical eight criteria mirror the scorecard layout of
the pipeline's evaluation report.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from statistics import mean, pstdev
from typing import Sequence

from .errors import ValidationError
from .pipeline import EvaluationReport, RunTrace, improvement_deltas

PAPER_CRITERIA = (
    "hallucinated_papers",
    "missing_papers",
    "length",
    "citation_emphasis",
    "coherence",
    "positioning_existence",
    "positioning_type",
    "positioning_ratio",
)
AUX_CRITERIA = ("coherence_ratio", "positioning_ratio_pass")
ALL_CRITERIA = PAPER_CRITERIA + AUX_CRITERIA


def report_scores(report: EvaluationReport) -> dict[str, float]:
    """Scalar value per criterion for one evaluated draft."""
    return {
        "hallucinated_papers": float(report.hallucination_pass),
        "missing_papers": float(report.missing_pass),
        "length": float(report.length.passed),
        "citation_emphasis": report.emphasis.mean,
        "coherence": float(report.coherence_pass),
        "positioning_existence": float(report.positioning.exists),
        "positioning_type": float(report.type_match),
        "positioning_ratio": report.positioning.ratio,
        "coherence_ratio": report.coherence.coherence_ratio,
        "positioning_ratio_pass": float(report.positioning.ratio == 1.0),
    }


@dataclass(frozen=True)
class ScoreCell:
    mean: float
    std: float | None = None


@dataclass
class ScoreTable:
    """Rows keyed by (generator, criterion, iteration)."""

    rows: dict[tuple[str, str, int], ScoreCell]

    @property
    def generators(self) -> tuple[str, ...]:
        return tuple(sorted({g for g, _, _ in self.rows}))

    @property
    def criteria(self) -> tuple[str, ...]:
        present = {c for _, c, _ in self.rows}
        ordered = [c for c in ALL_CRITERIA if c in present]
        ordered.extend(sorted(present - set(ALL_CRITERIA)))
        return tuple(ordered)

    @property
    def iterations(self) -> tuple[int, ...]:
        return tuple(sorted({i for _, _, i in self.rows}))

    def cell(self, generator: str, criterion: str, iteration: int) -> ScoreCell:
        return self.rows[(generator, criterion, iteration)]


def _check_same_k(traces: Sequence[RunTrace]) -> int:
    lengths = {len(t.iterations) for t in traces}
    if len(lengths) != 1:
        raise ValidationError(f"traces disagree on iteration count: {sorted(lengths)}")
    return lengths.pop()


def aggregate(traces: Sequence[RunTrace]) -> ScoreTable:
    """Mean scores across papers, with std across repeated run labels."""
    if not traces:
        raise ValidationError("cannot aggregate an empty trace list")
    k = _check_same_k(traces)
    rows: dict[tuple[str, str, int], ScoreCell] = {}
    by_generator: dict[str, list[RunTrace]] = {}
    for trace in traces:
        by_generator.setdefault(trace.generator, []).append(trace)
    for generator, group in by_generator.items():
        labels = sorted({t.run_label for t in group})
        for iteration in range(1, k + 1):
            per_trace: dict[str, dict[str, list[float]]] = {}
            for trace in group:
                record = trace.iterations[iteration - 1]
                scores = report_scores(record.report)
                bucket = per_trace.setdefault(trace.run_label, {})
                for criterion, value in scores.items():
                    bucket.setdefault(criterion, []).append(value)
            for criterion in ALL_CRITERIA:
                values = [
                    v for label in labels for v in per_trace.get(label, {}).get(criterion, [])
                ]
                if not values:
                    continue
                std = None
                if len(labels) > 1:
                    run_means = [
                        mean(per_trace[label][criterion])
                        for label in labels
                        if criterion in per_trace.get(label, {})
                    ]
                    std = pstdev(run_means) if len(run_means) > 1 else None
                rows[(generator, criterion, iteration)] = ScoreCell(mean(values), std)
    return ScoreTable(rows)


def delta_table(traces: Sequence[RunTrace]) -> ScoreTable:
    """Mean per-criterion improvement into each iteration 2..K."""
    if not traces:
        raise ValidationError("cannot aggregate an empty trace list")
    k = _check_same_k(traces)
    if k < 2:
        raise ValidationError("delta table needs traces with at least two iterations")
    rows: dict[tuple[str, str, int], ScoreCell] = {}
    by_generator: dict[str, list[RunTrace]] = {}
    for trace in traces:
        by_generator.setdefault(trace.generator, []).append(trace)
    for generator, group in by_generator.items():
        deltas = [improvement_deltas(trace) for trace in group]
        criteria = deltas[0].keys()
        for criterion in criteria:
            for step in range(k - 1):
                values = [d[criterion][step] for d in deltas]
                rows[(generator, criterion, step + 2)] = ScoreCell(mean(values))
    return ScoreTable(rows)


# --- persistence -------------------------------------------------------------

_COLUMNS = ("generator", "criterion", "iteration", "mean", "std")


def export_csv(table: ScoreTable, path: str | Path) -> None:
    """RFC-4180-style CSV with a stable column and row order."""
    with Path(path).open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, quoting=csv.QUOTE_MINIMAL)
        writer.writerow(_COLUMNS)
        for generator in table.generators:
            for criterion in table.criteria:
                for iteration in table.iterations:
                    cell = table.rows.get((generator, criterion, iteration))
                    if cell is None:
                        continue
                    writer.writerow(
                        [
                            generator,
                            criterion,
                            iteration,
                            f"{cell.mean:.6f}",
                            "" if cell.std is None else f"{cell.std:.6f}",
                        ]
                    )


def import_csv(path: str | Path) -> ScoreTable:
    rows: dict[tuple[str, str, int], ScoreCell] = {}
    with Path(path).open("r", newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames != list(_COLUMNS):
            raise ValidationError(f"unexpected columns {reader.fieldnames}")
        for row in reader:
            std = float(row["std"]) if row["std"] else None
            rows[(row["generator"], row["criterion"], int(row["iteration"]))] = ScoreCell(
                float(row["mean"]), std
            )
    return ScoreTable(rows)


def export_json(table: ScoreTable, path: str | Path) -> None:
    payload = [
        {
            "generator": generator,
            "criterion": criterion,
            "iteration": iteration,
            "mean": round(cell.mean, 6),
            "std": None if cell.std is None else round(cell.std, 6),
        }
        for (generator, criterion, iteration), cell in sorted(table.rows.items())
    ]
    Path(path).write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def import_json(path: str | Path) -> ScoreTable:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    rows = {
        (entry["generator"], entry["criterion"], entry["iteration"]): ScoreCell(
            entry["mean"], entry["std"]
        )
        for entry in payload
    }
    return ScoreTable(rows)
