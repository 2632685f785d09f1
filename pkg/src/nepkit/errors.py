"""Exception hierarchy shared across the engine.

Every error carries a stable machine-readable ``code`` so the HTTP layer
and the CLI can map failures without string matching.
"""

from __future__ import annotations


class NepkitError(Exception):
    """Base class for all engine errors."""

    code = "error"


class ParseError(NepkitError):
    """Malformed input text. ``line`` is 1-based when known."""

    code = "parse_error"

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class NotFoundError(NepkitError):
    code = "not_found"


class MissingPaperError(NotFoundError):
    code = "missing_paper"


class StateError(NepkitError):
    """Operation not allowed in the issue's current state."""

    code = "state_error"


class ConflictError(NepkitError):
    """Another editor action on the same issue is in flight."""

    code = "conflict"


class ValidationError(NepkitError):
    """Bad arguments or a subset/ordering precondition violation."""

    code = "validation_error"


class EmptySelectionError(ValidationError):
    """The editor selected no papers; the workflow does not advance."""

    code = "empty_selection"


class ConsistencyError(ValidationError):
    """Training history contradicts itself (sent paper not in its issue)."""

    code = "consistency_error"


class NotTrainedError(NepkitError):
    """Scoring requested against a cold-start model."""

    code = "not_trained"


class NotApplicableError(NepkitError):
    """Metric undefined for this issue (e.g. unsorted source order)."""

    code = "not_applicable"
