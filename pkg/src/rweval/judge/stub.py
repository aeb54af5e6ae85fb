"""Deterministic stand-ins for the judge and the generator.

The stub judge answers from a script keyed by a fingerprint of the rendered
prompt bytes, falling back to a configurable default, so every metric and the
whole pipeline can be exercised without any LLM or network access.
"""

from __future__ import annotations

import hashlib
import re
from typing import Mapping, Sequence

from .base import JudgeVerdict, Vote, aggregate_votes

_CITED_TITLE_RE = re.compile(r"^CITED PAPER \[(\d+)\] TITLE: (.*)$", re.MULTILINE)


def prompt_fingerprint(system: str, user: str) -> str:
    digest = hashlib.sha256()
    digest.update(system.encode("utf-8"))
    digest.update(b"\x00")
    digest.update(user.encode("utf-8"))
    return digest.hexdigest()


class StubJudge:
    """Scripted verdicts with fabricated reasoning text.

    `script` maps prompt fingerprints to answers; unscripted prompts get
    `default` (or, when the default lies outside the answer domain, the first
    domain entry). `vote_script` maps fingerprints to full vote sequences for
    exercising the majority-vote path.
    """

    def __init__(
        self,
        script: Mapping[str, str] | None = None,
        default: str = "yes",
        repetitions: int = 3,
        vote_script: Mapping[str, Sequence[str]] | None = None,
    ):
        self.script = dict(script or {})
        self.default = default
        self.repetitions = repetitions
        self.vote_script = {k: tuple(v) for k, v in (vote_script or {}).items()}
        self.calls = 0

    def ask(
        self,
        system: str,
        user: str,
        answer_domain: Sequence[str],
        *,
        tie_breaker: str | None = None,
    ) -> JudgeVerdict:
        self.calls += 1
        fp = prompt_fingerprint(system, user)
        if fp in self.vote_script:
            answers = list(self.vote_script[fp])
        else:
            answer = self.script.get(fp)
            if answer is None:
                answer = self.default if self.default in answer_domain else answer_domain[0]
            answers = [answer] * self.repetitions
        votes = tuple(
            Vote(reasoning=f"stub reasoning ({fp[:12]}, vote {i + 1})", answer=a)
            for i, a in enumerate(answers)
        )
        final, confident = aggregate_votes(
            answers, answer_domain, self.repetitions, tie_breaker
        )
        return JudgeVerdict(votes=votes, final=final, confident=confident)


class StubGenerator:
    """Deterministic draft generator driven purely by the prompt text.

    Drafts cite every paper listed in the prompt, grouped into paragraphs,
    and close with a contribution paragraph, so the deterministic metrics see
    realistic structure. Prompts without cited-paper listings get a short
    fingerprint-stamped reply.
    """

    def __init__(self, citations_per_paragraph: int = 4):
        self.citations_per_paragraph = max(1, citations_per_paragraph)
        self.calls = 0

    def generate(self, system: str, user: str) -> str:
        self.calls += 1
        listed = [(int(num), title.strip()) for num, title in _CITED_TITLE_RE.findall(user)]
        if not listed:
            return f"Stub response {prompt_fingerprint(system, user)[:12]}."
        listed.sort()
        paragraphs: list[str] = []
        for start in range(0, len(listed), self.citations_per_paragraph):
            group = listed[start : start + self.citations_per_paragraph]
            sentences = []
            for index, title in group:
                head = " ".join(title.split()[:6]) or "this topic"
                sentences.append(f"Prior work [{index}] investigated {head}.")
            sentences.append(
                "Our approach differs from these studies in scope and methodology."
            )
            paragraphs.append(" ".join(sentences))
        paragraphs.append(
            "In contrast to the works above, the main paper positions its "
            "contribution by addressing the limitations discussed in each "
            "preceding paragraph."
        )
        return "\n\n".join(paragraphs)
