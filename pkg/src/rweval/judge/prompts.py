"""Prompt templates with contrastive few-shot blocks loaded from data files.

Each template pairs a fixed system prompt with a user-message layout whose
placeholders are filled at render time. Few-shot example blocks are shipped
verbatim as UTF-8 text files under ``data/`` and embedded unchanged, wrapped
in <START OF EXAMPLE k> / <END OF EXAMPLE k> delimiters. Rendering is
byte-stable: identical inputs always produce identical prompt text.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Mapping

from ..errors import ConfigurationError, TemplateError

_PLACEHOLDER_RE = re.compile(r"\{([^{}\n]+)\}")

TASK_IDS = (
    "coherence",
    "positioning-type",
    "positioning-ratio-direct",
    "positioning-ratio-pairwise",
    "feedback",
    "draft-first",
    "draft-revise",
)

# Answer domains and tie rules for the judge-facing tasks.
ANSWER_DOMAINS = {
    "coherence": ("yes", "no"),
    "positioning-type": ("1", "2", "3"),
    "positioning-ratio-direct": ("yes", "no"),
    "positioning-ratio-pairwise": ("yes", "no"),
}
TIE_BREAKERS = {"positioning-type": "3"}

_SYSTEM_FILES = {
    "coherence": "coherence_system.txt",
    "positioning-type": "positioning_type_system.txt",
    "positioning-ratio-direct": "positioning_direct_system.txt",
    "positioning-ratio-pairwise": "positioning_pairwise_system.txt",
    "feedback": "feedback_system.txt",
    "draft-first": "draft_first_system.txt",
    "draft-revise": "draft_revise_system.txt",
}

_USER_LAYOUTS = {
    "coherence": (
        "PAPER CONTEXT: {paper_context}",
        "CITATION SENTENCE: {citation_sentence}",
        "CITATION PAPER: {citation_number}",
    ),
    "positioning-type": ("DRAFT: {draft}",),
    "positioning-ratio-direct": ("DRAFT: {paragraph}",),
    "positioning-ratio-pairwise": (
        "CONTEXT: {context_paragraph}",
        "FINAL: {final_paragraph}",
    ),
    "feedback": ("EVALUATION REPORT: {evaluation_report}",),
    "draft-first": (
        "MAIN PAPER TITLE: {main_title}",
        "MAIN PAPER ABSTRACT: {main_abstract}",
        "MAIN PAPER INTRODUCTION: {main_introduction}",
        "{cited_papers}",
    ),
    "draft-revise": (
        "MAIN PAPER TITLE: {main_title}",
        "MAIN PAPER ABSTRACT: {main_abstract}",
        "MAIN PAPER INTRODUCTION: {main_introduction}",
        "{cited_papers}",
        "PREVIOUS DRAFT: {previous_draft}",
        "FEEDBACK: {feedback}",
    ),
}


@dataclass(frozen=True)
class PromptTemplate:
    task_id: str
    system: str
    few_shot: tuple[str, ...]
    user_layout: tuple[str, ...]

    @property
    def user_slots(self) -> tuple[str, ...]:
        names: list[str] = []
        for line in self.user_layout:
            for match in _PLACEHOLDER_RE.finditer(line):
                if match.group(1) not in names:
                    names.append(match.group(1))
        return tuple(names)


def _read_data(name: str) -> str:
    return (
        resources.files("rweval.judge").joinpath("data", name).read_text(encoding="utf-8").rstrip("\n")
    )


def _split_example_pair(block: str) -> tuple[str, str]:
    head, _, rest = block.partition("\n\nExample 2:\n\n")
    if not rest:
        raise ConfigurationError("example data file does not contain two blocks")
    return head, "Example 2:\n\n" + rest


@lru_cache(maxsize=None)
def load_template(task_id: str) -> PromptTemplate:
    if task_id not in TASK_IDS:
        raise ConfigurationError(f"unknown prompt task {task_id!r}")
    system = _read_data(_SYSTEM_FILES[task_id])
    if task_id == "coherence":
        few_shot = (_read_data("coherence_example_1.txt"), _read_data("coherence_example_2.txt"))
    elif task_id == "positioning-type":
        few_shot = (
            _read_data("positioning_type_example_1.txt"),
            _read_data("positioning_type_example_2.txt"),
            _read_data("positioning_type_example_3.txt"),
        )
    elif task_id == "positioning-ratio-direct":
        few_shot = _split_example_pair(_read_data("positioning_direct_examples.txt"))
    elif task_id == "positioning-ratio-pairwise":
        few_shot = _split_example_pair(_read_data("positioning_pairwise_examples.txt"))
    else:
        few_shot = ()
    return PromptTemplate(
        task_id=task_id,
        system=system,
        few_shot=few_shot,
        user_layout=_USER_LAYOUTS[task_id],
    )


def _fill(text: str, slots: Mapping[str, str]) -> str:
    """Single-pass placeholder substitution; substituted values are not rescanned."""

    def sub(match: re.Match) -> str:
        name = match.group(1)
        if name not in slots:
            raise TemplateError(name)
        return str(slots[name])

    return _PLACEHOLDER_RE.sub(sub, text)


def render_prompt(template: PromptTemplate, slots: Mapping[str, str]) -> tuple[str, str]:
    """Render (system, user) text; every few-shot block appears verbatim, in order."""
    system = _fill(template.system, slots)
    parts: list[str] = []
    for k, block in enumerate(template.few_shot, start=1):
        parts.append(f"<START OF EXAMPLE {k}>")
        parts.append(block)
        parts.append(f"<END OF EXAMPLE {k}>")
    for line in template.user_layout:
        parts.append(_fill(line, slots))
    return system, "\n\n".join(parts)


def build_cited_papers_block(papers: Mapping[int, object]) -> str:
    """User-message block listing the provided cited papers in index order.

    `papers` maps citation index -> record with title/abstract/introduction.
    """
    chunks: list[str] = []
    for index in sorted(papers):
        record = papers[index]
        chunks.append(f"CITED PAPER [{index}] TITLE: {record.title}")
        chunks.append(f"CITED PAPER [{index}] ABSTRACT: {record.abstract}")
        chunks.append(f"CITED PAPER [{index}] INTRODUCTION: {record.introduction}")
    return "\n\n".join(chunks)
