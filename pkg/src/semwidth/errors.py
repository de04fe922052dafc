class SemwidthError(Exception):
    """Base class for errors raised by the semwidth library."""


class RegexSyntaxError(SemwidthError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class QueryFormatError(SemwidthError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class DatabaseFormatError(SemwidthError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class UnknownStateError(SemwidthError):
    pass


class ArityMismatchError(SemwidthError):
    pass


class NotACQError(SemwidthError):
    pass


class CapExceededError(SemwidthError):
    """A configured resource cap was hit before the computation finished."""

    def __init__(self, cap: str, limit: int, detail: str = ""):
        message = f"cap '{cap}' exceeded (limit {limit})"
        if detail:
            message = f"{message}: {detail}"
        super().__init__(message)
        self.cap = cap
        self.limit = limit


class InvalidDecompositionError(SemwidthError):
    pass


class InvalidWidthClassError(SemwidthError):
    pass


class RefinementError(SemwidthError):
    pass


class PreconditionError(SemwidthError):
    pass
