"""Exception hierarchy for :py:mod:`sap`.

Every error raised on purpose by this package derives from :py:class:`SapError`
so that front ends can translate them into exit codes in one place (see
:py:func:`sap.cli.main`).
"""


class SapError(Exception):
    """Base class of all package errors."""


class SignatureError(SapError, ValueError):
    """A boundary signature is malformed or violates an operation's precondition."""


class DecodeError(SignatureError):
    """A compact signature key cannot be decoded."""


class ModulusError(SapError, ValueError):
    """Moduli are mismatched, out of range or not pairwise coprime."""


class CapacityError(SapError):
    """The product of the moduli cannot bound the largest requested count."""

    def __init__(self, message, required, available):
        super().__init__(message)
        self.required = required
        self.available = available


class InconsistencyError(SapError):
    """Redundant computations disagree."""


class CheckpointError(SapError):
    """A checkpoint file cannot be written or read back."""


class CheckpointMismatchError(CheckpointError):
    """A checkpoint was written for a different sweep configuration."""


class SeriesError(SapError, ValueError):
    """A series violates its structural invariants."""


class SeriesParseError(SeriesError):
    """A series file cannot be parsed."""

    def __init__(self, message, lineno=None):
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)
        self.lineno = lineno


class BudgetError(SapError):
    """The brute-force oracle was asked for more work than its budget allows."""

    def __init__(self, message, estimated_nodes):
        super().__init__(message)
        self.estimated_nodes = estimated_nodes


class AnalysisError(SapError, ValueError):
    """A series fit cannot be carried out."""
