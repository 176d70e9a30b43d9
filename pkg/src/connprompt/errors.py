"""Exception hierarchy shared across the toolkit.

The CLI maps these onto exit codes: config/usage errors exit 2, data
errors exit 3, backend errors exit 4.
"""

from __future__ import annotations


class ToolkitError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(ToolkitError):
    """Invalid experiment configuration. Carries every violation at once."""

    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class DataError(ToolkitError):
    """Base class for corpus/input problems."""


class ParseError(DataError):
    """Malformed input line. Carries the 1-based line number."""

    def __init__(self, line_no: int, message: str):
        self.line_no = line_no
        super().__init__(f"line {line_no}: {message}")


class SchemaError(DataError):
    """A record is syntactically valid JSON but violates the schema."""

    def __init__(self, field: str, message: str, line_no: int | None = None):
        self.field = field
        self.line_no = line_no
        prefix = f"line {line_no}: " if line_no is not None else ""
        super().__init__(f"{prefix}field '{field}': {message}")


class DomainError(DataError):
    """A value is outside its documented domain (e.g. PDTB section range)."""


class PromptError(ToolkitError):
    """Bad arguments to template rendering."""


class ContractError(ToolkitError):
    """An inter-module contract was violated (mask count, candidate set, ...)."""


class CapabilityError(ToolkitError):
    """An operation was requested that the scorer does not support."""


class UnmappedAnswerError(ToolkitError):
    """An answer word is not contained in any answer set of the verbalizer."""

    def __init__(self, word: str):
        self.word = word
        super().__init__(f"answer word {word!r} is not in any answer set")


class InductionError(DataError):
    """Answer-set induction left a label without any surviving candidate."""

    def __init__(self, label: str):
        self.label = label
        super().__init__(f"no surviving answer candidates for label {label!r}")


class BackendError(ToolkitError):
    """Base class for remote-scorer failures."""


class BackendUnavailableError(BackendError):
    """The scoring backend could not be reached."""

    def __init__(self, endpoint: str, attempts: int, cause: str):
        self.endpoint = endpoint
        self.attempts = attempts
        super().__init__(
            f"backend {endpoint} unavailable after {attempts} attempt(s): {cause}"
        )


class HandshakeError(BackendError):
    """The backend answered but speaks an incompatible protocol version."""
