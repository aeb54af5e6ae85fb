"""Multi-turn, fine-grained evaluation of LLM-generated related-work sections.

The package evaluates a generated related-work draft against a citing paper's
own (gold) related-work section: deterministic citation/length/emphasis checks,
LLM-judged coherence and positioning checks, an iterative generate-evaluate-
feedback pipeline, and an expert arena with TrueSkill ranking.
"""

__version__ = "0.1.0"
