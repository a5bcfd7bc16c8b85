"""Exception hierarchy shared by all modules."""


class MemSvmError(Exception):
    """Base class for every error raised by this package."""


class ParameterError(MemSvmError, ValueError):
    pass


class RangeError(MemSvmError, ValueError):
    pass


class ShapeError(MemSvmError, ValueError):
    pass


class ConfigurationError(MemSvmError):
    pass


class DataError(MemSvmError):
    pass


class SchemaError(DataError):
    pass


class ParseError(DataError):
    def __init__(self, message: str, row: int | None = None, column: int | None = None):
        super().__init__(message)
        self.row = row
        self.column = column


class ConvergenceError(MemSvmError):
    pass


class StageError(MemSvmError):
    """Wraps an error raised inside one pipeline stage, keeping the stage name."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
        self.stage = stage
        self.cause = cause
