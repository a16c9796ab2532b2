"""Exception types shared across the package."""


class RieszTraceError(Exception):
    """Base class for all errors raised by riesztrace."""


class PreconditionError(RieszTraceError, ValueError):
    """An input violates the documented preconditions of an operation."""


class SingularPointError(RieszTraceError):
    """The evaluation point lies on a segment where the kernel is not integrable."""

    def __init__(self, message, segment_index=None):
        super().__init__(message)
        self.segment_index = segment_index


class ToleranceNotMet(RieszTraceError):
    """Adaptive quadrature ran out of budget; ``estimate`` holds the best value."""

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


class FormatError(RieszTraceError):
    """A text input (config or data file) could not be parsed; carries the line."""

    def __init__(self, message, path=None, line=None):
        where = f"{path or '<input>'}:{line}: " if line is not None else (f"{path}: " if path else "")
        super().__init__(where + message)
        self.path = path
        self.line = line
