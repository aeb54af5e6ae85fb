"""Render score trajectories as matplotlib figures next to the exported tables."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .reporting import PAPER_CRITERIA, ScoreTable

_TITLES = {
    "hallucinated_papers": "Hallucinated papers (pass rate)",
    "missing_papers": "Missing papers (pass rate)",
    "length": "Length (pass rate)",
    "citation_emphasis": "Citation emphasis (mean score)",
    "coherence": "Coherence (pass rate)",
    "positioning_existence": "Positioning existence",
    "positioning_type": "Positioning type match",
    "positioning_ratio": "Positioning ratio",
    "coherence_ratio": "Coherence (mean ratio)",
    "positioning_ratio_pass": "Positioning ratio (pass rate)",
}


def render_figures(
    table: ScoreTable,
    out_dir: str | Path,
    criteria: Sequence[str] = PAPER_CRITERIA,
) -> list[Path]:
    """One PNG per criterion: mean score over iterations, one line per generator."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    iterations = table.iterations
    for criterion in criteria:
        if criterion not in table.criteria:
            continue
        fig, ax = plt.subplots(figsize=(5.0, 3.2))
        for generator in table.generators:
            xs, ys, errs = [], [], []
            for iteration in iterations:
                cell = table.rows.get((generator, criterion, iteration))
                if cell is None:
                    continue
                xs.append(iteration)
                ys.append(cell.mean)
                errs.append(cell.std or 0.0)
            if not xs:
                continue
            if any(errs):
                ax.errorbar(xs, ys, yerr=errs, marker="o", capsize=3, label=generator)
            else:
                ax.plot(xs, ys, marker="o", label=generator)
        ax.set_xlabel("iteration")
        ax.set_ylabel("score")
        ax.set_title(_TITLES.get(criterion, criterion))
        ax.set_xticks(list(iterations))
        ax.set_ylim(-0.05, 1.05)
        ax.grid(alpha=0.3)
        ax.legend(fontsize=8)
        fig.tight_layout()
        path = out / f"{criterion}.png"
        fig.savefig(path, dpi=150)
        plt.close(fig)
        written.append(path)
    return written
