"""Exception taxonomy shared across the platform.

Every error carries a machine-readable ``code`` and, where it concerns a
specific input field, a dotted ``field_path`` (e.g. ``selector.time_range``).
The service layer maps codes to HTTP statuses and the CLI maps them to exit
codes (validation 2, backend failure 3, not found 4).
"""

from __future__ import annotations


class RanLoopError(Exception):
    """Base class for all platform errors."""

    code = "internal_error"
    exit_code = 1

    def __init__(self, message: str, field_path: str | None = None):
        super().__init__(message)
        self.message = message
        self.field_path = field_path

    def payload(self) -> dict:
        out = {"code": self.code, "message": self.message}
        if self.field_path is not None:
            out["field_path"] = self.field_path
        return out


class ValidationError(RanLoopError):
    """Malformed input: bad scenario, selector, request, or parameter value."""

    code = "validation_error"
    exit_code = 2


class NotFoundError(RanLoopError):
    """Referenced entity (run, snapshot, element, scenario...) does not exist."""

    code = "not_found"
    exit_code = 4


class ConflictError(RanLoopError):
    """Operation conflicts with current state (e.g. approval already decided)."""

    code = "conflict"
    exit_code = 2


class StateError(RanLoopError):
    """Illegal state-machine transition or operation on a terminal run."""

    code = "state_error"
    exit_code = 2


class BackendError(RanLoopError):
    """Reasoning backend failed: parse error after retries, timeout, transport."""

    code = "backend_failure"
    exit_code = 3


class BackendParseError(BackendError):
    """Backend produced output that does not conform to the declared shape."""

    code = "backend_parse_error"


class BackendTimeoutError(BackendError):
    """Backend did not answer within the configured timeout."""

    code = "backend_timeout"
