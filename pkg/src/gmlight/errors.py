class FormatError(ValueError):
    """Malformed or unsupported file payload."""

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (at byte {offset})"
        super().__init__(message)
        self.offset = offset


class UnsupportedScaleError(ValueError):
    """Problem too large for a dense oracle solver."""


class NonConvergenceError(RuntimeError):
    """Iterative solver stopped at its iteration cap before meeting tolerance."""
