"""Exception types shared across the package."""


class TrajevalError(Exception):
    """Base class for all errors raised by this package."""


class IngestError(TrajevalError):
    """Malformed or inconsistent input data (bad line, duplicate record, hole in a dump)."""

    def __init__(self, message, *, path=None, line=None):
        if path is not None and line is not None:
            message = f"{path}:{line}: {message}"
        elif path is not None:
            message = f"{path}: {message}"
        super().__init__(message)
        self.path = path
        self.line = line


class ShapeError(TrajevalError):
    """Array shapes do not match the contract of the operation."""

    def __init__(self, message, *, expected=None, actual=None):
        super().__init__(message)
        self.expected = expected
        self.actual = actual
