"""OpenAI-compatible chat-completions client with retries and structured output.

One `ChatClient` wraps a single endpoint/model pair. `HttpJudge` layers the
repeated-sampling majority vote on top; `ChatGenerator` exposes the plain
(system, user) -> text surface the pipeline expects from generators.
"""

from __future__ import annotations

import json
import logging
import os
import re
import time
from dataclasses import dataclass
from typing import Sequence

import httpx

from ..errors import ConfigurationError, JudgeUnavailableError, TransportError
from .base import JudgeVerdict, Vote, aggregate_votes

logger = logging.getLogger(__name__)

_BACKOFF_BASE = 1.0
_BACKOFF_FACTOR = 2.0
_RETRY_STATUS = {429, 500, 502, 503, 504}

_VERDICT_SCHEMA = {
    "name": "verdict",
    "schema": {
        "type": "object",
        "properties": {
            "reasoning": {"type": "string"},
            "answer": {"type": "string"},
        },
        "required": ["reasoning", "answer"],
        "additionalProperties": False,
    },
}


@dataclass
class EndpointConfig:
    """Connection settings for one OpenAI-compatible chat endpoint."""

    endpoint: str
    model: str
    temperature: float = 0.8
    timeout: float = 60.0
    max_retries: int = 3
    api_key_env: str = "OPENAI_API_KEY"
    # Reasoning-style models reject a temperature parameter; flag them here.
    supports_temperature: bool = True

    def __post_init__(self):
        if self.temperature < 0:
            raise ConfigurationError("temperature must be >= 0")
        if self.max_retries < 1:
            raise ConfigurationError("max_retries must be >= 1")


@dataclass
class JudgeConfig(EndpointConfig):
    repetitions: int = 3
    concurrency_limit: int = 4
    # Whether the endpoint accepts a JSON-schema response_format constraint.
    structured_output: bool = True

    def __post_init__(self):
        super().__post_init__()
        if self.repetitions < 1 or self.repetitions % 2 == 0:
            raise ConfigurationError("repetitions must be a positive odd count")
        if self.concurrency_limit < 1:
            raise ConfigurationError("concurrency_limit must be >= 1")


class ChatClient:
    """Minimal chat-completions caller with exponential-backoff retries."""

    def __init__(self, config: EndpointConfig, transport: httpx.BaseTransport | None = None):
        self.config = config
        self._client = httpx.Client(timeout=config.timeout, transport=transport)

    def close(self) -> None:
        self._client.close()

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(self.config.api_key_env, "")
        if key:
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def chat(self, system: str, user: str, *, structured: bool = False) -> str:
        url = self.config.endpoint.rstrip("/") + "/chat/completions"
        body: dict = {
            "model": self.config.model,
            "messages": [
                {"role": "system", "content": system},
                {"role": "user", "content": user},
            ],
        }
        if self.config.supports_temperature:
            body["temperature"] = self.config.temperature
        if structured:
            body["response_format"] = {"type": "json_schema", "json_schema": _VERDICT_SCHEMA}

        last_error: Exception | None = None
        for attempt in range(self.config.max_retries):
            try:
                response = self._client.post(url, json=body, headers=self._headers())
            except httpx.HTTPError as exc:
                last_error = exc
            else:
                if response.status_code == 200:
                    try:
                        return response.json()["choices"][0]["message"]["content"]
                    except (KeyError, IndexError, ValueError) as exc:
                        raise TransportError(
                            f"malformed chat-completions response: {exc}"
                        ) from exc
                if response.status_code not in _RETRY_STATUS:
                    raise TransportError(
                        f"chat endpoint returned {response.status_code}: {response.text[:200]}"
                    )
                last_error = TransportError(f"status {response.status_code}")
            if attempt + 1 < self.config.max_retries:
                time.sleep(_BACKOFF_BASE * _BACKOFF_FACTOR**attempt)
        raise TransportError(f"chat request failed after {self.config.max_retries} attempts: {last_error}")


def check_reachable(endpoint: str, timeout: float = 5.0) -> None:
    """Raise TransportError when no server answers at the endpoint at all.

    Any HTTP response counts as reachable; OpenAI-compatible servers differ in
    which discovery routes they expose.
    """
    try:
        httpx.get(endpoint.rstrip("/") + "/models", timeout=timeout)
    except httpx.HTTPError as exc:
        raise TransportError(f"endpoint {endpoint} is unreachable: {exc}") from exc


def _strip_code_fence(text: str) -> str:
    stripped = text.strip()
    if stripped.startswith("```"):
        stripped = re.sub(r"^```[a-zA-Z]*\n?", "", stripped)
        stripped = re.sub(r"\n?```$", "", stripped)
    return stripped.strip()


def _canonical_answer(raw, answer_domain: Sequence[str]) -> str | None:
    token = str(raw).strip().strip('."\'').lower()
    for candidate in answer_domain:
        if token == candidate.lower():
            return candidate
    return None


def parse_verdict(text: str, answer_domain: Sequence[str]) -> Vote | None:
    """Parse a structured {reasoning, answer} response, with a lenient fallback.

    The fallback takes the last occurrence of an answer-domain token in the
    raw text, which is how open-weight models that break the JSON format are
    still usable.
    """
    cleaned = _strip_code_fence(text)
    try:
        payload = json.loads(cleaned)
    except ValueError:
        payload = None
    if isinstance(payload, dict) and "answer" in payload:
        answer = _canonical_answer(payload["answer"], answer_domain)
        if answer is not None:
            return Vote(reasoning=str(payload.get("reasoning", "")), answer=answer)
    tokens = [
        (m.start(), candidate)
        for candidate in answer_domain
        for m in re.finditer(rf"(?<![\w-]){re.escape(candidate)}(?![\w-])", text, re.IGNORECASE)
    ]
    if tokens:
        _, answer = max(tokens)
        return Vote(reasoning=text.strip(), answer=answer)
    return None


class HttpJudge:
    """Majority-of-N judge over an OpenAI-compatible endpoint."""

    def __init__(self, config: JudgeConfig, transport: httpx.BaseTransport | None = None):
        self.config = config
        self._chat = ChatClient(config, transport=transport)

    def close(self) -> None:
        self._chat.close()

    def _one_vote(self, system: str, user: str, answer_domain: Sequence[str]) -> Vote | None:
        # Semantic failures get exactly one re-ask; transport failures have
        # already been retried inside ChatClient.
        for _ in range(2):
            try:
                raw = self._chat.chat(system, user, structured=self.config.structured_output)
            except TransportError as exc:
                logger.warning("judge vote dropped: %s", exc)
                return None
            vote = parse_verdict(raw, answer_domain)
            if vote is not None:
                return vote
            logger.warning("unparseable judge response; re-asking once")
        return None

    def ask(
        self,
        system: str,
        user: str,
        answer_domain: Sequence[str],
        *,
        tie_breaker: str | None = None,
    ) -> JudgeVerdict:
        votes: list[Vote] = []
        failures = 0
        for _ in range(self.config.repetitions):
            vote = self._one_vote(system, user, answer_domain)
            if vote is None:
                failures += 1
            else:
                votes.append(vote)
        if not votes:
            raise JudgeUnavailableError(
                f"all {self.config.repetitions} judge votes failed for model {self.config.model}"
            )
        final, confident = aggregate_votes(
            [v.answer for v in votes], answer_domain, self.config.repetitions, tie_breaker
        )
        return JudgeVerdict(votes=tuple(votes), final=final, confident=confident, failures=failures)


class ChatGenerator:
    """Generator handle backed by a chat endpoint."""

    def __init__(self, config: EndpointConfig, transport: httpx.BaseTransport | None = None):
        self.config = config
        self._chat = ChatClient(config, transport=transport)

    def close(self) -> None:
        self._chat.close()

    def generate(self, system: str, user: str) -> str:
        return self._chat.chat(system, user)
