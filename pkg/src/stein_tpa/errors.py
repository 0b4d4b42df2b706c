"""Exception hierarchy.

Input problems derive from ``InputError`` (CLI exit code 2); failed
mathematical checks raise ``VerificationError`` (exit code 1).
"""


class SteinTPAError(Exception):
    pass


class InputError(SteinTPAError, ValueError):
    """Bad parameters, malformed files or requests outside supported limits."""


class InvalidParameterError(InputError):
    pass


class PreconditionError(InputError):
    pass


class UnsupportedInputError(InputError):
    pass


class SizeLimitError(InputError):
    def __init__(self, message: str, limit: int):
        super().__init__(message)
        self.limit = limit


class WindowOverflowError(InputError):
    def __init__(self, message: str, safe_max: int):
        super().__init__(message)
        self.safe_max = safe_max


class MissingIngredientError(InputError):
    pass


class GraphParseError(InputError):
    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class RegularityError(InputError):
    pass


class ExcludedGraphError(InputError):
    """Graph violates the standing assumption (bipartite or a cycle)."""

    def __init__(self, message: str, reasons: tuple[str, ...] = ()):
        super().__init__(message)
        self.reasons = reasons


class VerificationError(SteinTPAError, AssertionError):
    """A mathematical property that must hold was found violated."""
