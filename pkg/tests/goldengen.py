"""Fixed-slot prompt renderings behind the golden snapshot files.

`render_all` is the single source of truth for the slot values; the golden
files under tests/golden/ were generated from it once and are compared
byte-for-byte by the acceptance suite thereafter.
"""

from __future__ import annotations

from rweval.judge import load_template, render_prompt
from rweval.judge.prompts import build_cited_papers_block


class _Record:
    def __init__(self, title, abstract, introduction):
        self.title = title
        self.abstract = abstract
        self.introduction = introduction


CITED_BLOCK = build_cited_papers_block(
    {
        1: _Record(
            "Sample Cited Title One",
            "Sample cited abstract one.",
            "Sample cited introduction one.",
        ),
        2: _Record(
            "Sample Cited Title Two",
            "Sample cited abstract two.",
            "Sample cited introduction two.",
        ),
    }
)

STYLE_RULE = (
    "In each paragraph, you need to state the main paper's contribution "
    "and its position among the literature in accordance with the "
    "corresponding subject matter of that paragraph."
)

SLOTS = {
    "coherence": {
        "paper_context": "SAMPLE PAPER CONTEXT.",
        "citation_sentence": "SAMPLE CITATION SENTENCE [7].",
        "citation_number": "7",
    },
    "positioning-type": {
        "draft": "SAMPLE DRAFT PARAGRAPH ONE.\n\nSAMPLE DRAFT PARAGRAPH TWO.",
    },
    "positioning-ratio-direct": {"paragraph": "SAMPLE PARAGRAPH."},
    "positioning-ratio-pairwise": {
        "context_paragraph": "SAMPLE CONTEXT PARAGRAPH.",
        "final_paragraph": "SAMPLE FINAL PARAGRAPH.",
    },
    "feedback": {
        "evaluation_report": (
            "1. Missing papers: [4]. Hallucinated papers: none.\n"
            "2. Length: the draft has 120 tokens; the expected length is between "
            "90 and 150 tokens (gold section: 120 tokens). The draft is within "
            "the expected interval."
        ),
    },
    "draft-first": {
        "contribution information": STYLE_RULE,
        "main_title": "SAMPLE MAIN TITLE",
        "main_abstract": "SAMPLE MAIN ABSTRACT.",
        "main_introduction": "SAMPLE MAIN INTRODUCTION.",
        "cited_papers": CITED_BLOCK,
    },
    "draft-revise": {
        "contribution information": STYLE_RULE,
        "main_title": "SAMPLE MAIN TITLE",
        "main_abstract": "SAMPLE MAIN ABSTRACT.",
        "main_introduction": "SAMPLE MAIN INTRODUCTION.",
        "cited_papers": CITED_BLOCK,
        "previous_draft": "SAMPLE PREVIOUS DRAFT.",
        "feedback": "SAMPLE FEEDBACK.",
    },
}


def render_all() -> dict[str, str]:
    rendered = {}
    for task_id, slots in SLOTS.items():
        system, user = render_prompt(load_template(task_id), slots)
        rendered[task_id] = (
            "===== SYSTEM =====\n" + system + "\n===== USER =====\n" + user + "\n"
        )
    return rendered


def golden_name(task_id: str) -> str:
    return task_id.replace("-", "_") + ".golden.txt"
