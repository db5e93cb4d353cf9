"""Exception types shared across the audit engine.

Every error carries a stable machine-readable ``code`` so the CLI and the
HTTP service can surface failures uniformly.
"""

from __future__ import annotations


class AuditError(Exception):
    """Base class for all audit errors."""

    code = "AUDIT_ERROR"

    def __init__(self, message: str, **details):
        super().__init__(message)
        self.details = details

    def to_json(self) -> dict:
        return {"error": self.code, "message": str(self), "details": self.details}


class ParseError(AuditError):
    code = "PARSE_ERROR"


class DuplicateCardError(AuditError):
    code = "DUPLICATE_CARD"


class UnknownCardError(AuditError):
    code = "UNKNOWN_CARD"


class UnknownContestError(AuditError):
    code = "UNKNOWN_CONTEST"


class DuplicateCvrError(AuditError):
    code = "DUPLICATE_CVR"


class TiedOutcomeError(AuditError):
    code = "TIED_OUTCOME"


class RhoUndefinedError(AuditError):
    code = "RHO_UNDEFINED"


class NotAReportedWinError(AuditError):
    code = "NOT_A_REPORTED_WIN"


class FullCountRequiredError(AuditError):
    code = "FULL_COUNT_REQUIRED"


class OutcomeNotConfirmableError(AuditError):
    code = "OUTCOME_NOT_CONFIRMABLE"


class UnexpectedCardError(AuditError):
    code = "UNEXPECTED_CARD"


class RoundIncompleteError(AuditError):
    code = "ROUND_INCOMPLETE"


class RoundStateError(AuditError):
    code = "ROUND_STATE"


class UnknownCaseError(AuditError):
    code = "UNKNOWN_CASE"


class SessionNotFoundError(AuditError):
    code = "SESSION_NOT_FOUND"


class SessionTamperedError(AuditError):
    code = "SESSION_TAMPERED"
