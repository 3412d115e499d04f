"""Exception hierarchy shared by every pipeline stage."""


class FolksonetError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(FolksonetError):
    """A tagging record could not be parsed."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ConfigError(FolksonetError, ValueError):
    """Invalid parameter or inconsistent input."""


class NumericalError(FolksonetError, ArithmeticError):
    """A numerical routine failed (e.g. eigensolver did not converge)."""


class ConvergenceError(NumericalError):
    def __init__(self, message: str, off_norm: float):
        self.off_norm = off_norm
        super().__init__(f"{message} (off-diagonal norm remaining: {off_norm:.3e})")
