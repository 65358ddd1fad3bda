"""Exception types shared across the package."""


class FeederParseError(Exception):
    """Malformed feeder description text; carries the offending line number."""

    def __init__(self, message: str, line_no: int | None = None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


class FeederValidationError(Exception):
    """Structurally invalid feeder (non-radial, phase mismatch, bad bounds)."""


class ConvergenceError(Exception):
    """Iterative solve failed to converge within the iteration budget."""
