"""LLM judge layer: prompt assembly, chat endpoint client, and majority voting."""

from .base import JudgeHandle, JudgeVerdict, Vote, aggregate_votes
from .client import ChatClient, ChatGenerator, EndpointConfig, HttpJudge, JudgeConfig
from .prompts import PromptTemplate, load_template, render_prompt
from .stub import StubGenerator, StubJudge, prompt_fingerprint

__all__ = [
    "ChatClient",
    "ChatGenerator",
    "EndpointConfig",
    "HttpJudge",
    "JudgeConfig",
    "JudgeHandle",
    "JudgeVerdict",
    "PromptTemplate",
    "StubGenerator",
    "StubJudge",
    "Vote",
    "aggregate_votes",
    "load_template",
    "prompt_fingerprint",
    "render_prompt",
]
