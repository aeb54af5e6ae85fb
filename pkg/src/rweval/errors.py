"""Exception types shared across the package.

The CLI maps these onto exit codes: validation -> 1, configuration -> 2,
transport -> 3.
"""

from __future__ import annotations


class RwevalError(Exception):
    """Base class for all package errors."""


class ValidationError(RwevalError):
    """Input data violates a documented invariant."""


class CorpusParseError(RwevalError):
    """Corpus file could not be parsed; carries the failing record index."""

    def __init__(self, message: str, record_index: int | None = None):
        super().__init__(message)
        self.record_index = record_index


class CorpusValidationError(ValidationError):
    """A corpus record violates an invariant; names the paper and the rule."""

    def __init__(self, paper_id: str, rule: str):
        super().__init__(f"paper {paper_id!r}: {rule}")
        self.paper_id = paper_id
        self.rule = rule


class ConfigurationError(RwevalError):
    """A parameter or runtime configuration is unusable."""


class TemplateError(RwevalError):
    """Prompt template rendering failed; names the offending placeholder."""

    def __init__(self, placeholder: str):
        super().__init__(f"no value provided for placeholder {placeholder!r}")
        self.placeholder = placeholder


class TransportError(RwevalError):
    """HTTP transport to an endpoint failed after retries."""


class JudgeUnavailableError(RwevalError):
    """Every vote of a judge query failed; no verdict can be formed."""
