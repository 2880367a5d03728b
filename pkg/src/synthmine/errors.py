"""Exception hierarchy shared across the pipeline.

The CLI maps every error to a one-line, machine-parseable
``error: <ClassName>: <message>`` on stderr, so classes here are named
after the failure they report rather than where they occur.
"""

from __future__ import annotations


class SynthmineError(Exception):
    """Base class for all pipeline errors."""


# -- dataset parsing ---------------------------------------------------------

class MalformedLine(SynthmineError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class UnknownTag(SynthmineError):
    def __init__(self, line: int, tag: str):
        super().__init__(f"line {line}: unknown tag {tag!r}")
        self.line = line
        self.tag = tag


class EmptyInput(SynthmineError):
    pass


class OrphanInsideTag(SynthmineError):
    def __init__(self, position: int, message: str = ""):
        super().__init__(message or f"I tag at position {position} has no B/I of the same type before it")
        self.position = position


class OverlappingSpans(SynthmineError):
    pass


class SpanOutOfRange(SynthmineError):
    pass


class MissingPlaceholder(SynthmineError):
    def __init__(self, line: int, placeholder: str):
        super().__init__(f"line {line}: sentence lacks required placeholder {placeholder!r}")
        self.line = line
        self.placeholder = placeholder


class BadLabel(SynthmineError):
    def __init__(self, line: int, label: str):
        super().__init__(f"line {line}: label {label!r} is not Yes/No")
        self.line = line
        self.label = label


# -- chat gateway ------------------------------------------------------------

class MissingApiKey(SynthmineError):
    pass


class TransportError(SynthmineError):
    pass


class RateLimited(SynthmineError):
    pass


class ProviderError(SynthmineError):
    def __init__(self, status: int, body: str):
        super().__init__(f"provider returned status {status}: {body[:200]}")
        self.status = status
        self.body = body


# -- prompt templates and refinement -----------------------------------------

class UnboundPlaceholder(SynthmineError):
    pass


class UnknownPlaceholder(SynthmineError):
    pass


class CandidateCountMismatch(SynthmineError):
    def __init__(self, count: int, expected: int = 5):
        super().__init__(f"expected {expected} candidate prompts, got {count}")
        self.count = count
        self.expected = expected


class UnparseableReply(SynthmineError):
    pass


class InvalidSelection(SynthmineError):
    pass


class RoundNotReady(SynthmineError):
    pass


# -- generation --------------------------------------------------------------

class EmptyReply(SynthmineError):
    pass


class PoolTooSmall(SynthmineError):
    pass


# -- scoring and analysis ----------------------------------------------------

class ShapeMismatch(SynthmineError):
    pass


class LengthMismatch(SynthmineError):
    pass


class EmptyCorpus(SynthmineError):
    pass


class DimensionMismatch(SynthmineError):
    pass


# -- configuration and runs --------------------------------------------------

class ConfigError(SynthmineError):
    pass


class RunLocked(SynthmineError):
    pass
