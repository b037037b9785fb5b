"""Exception hierarchy shared across the package.

The CLI maps these onto distinct exit codes, and the HTTP service maps
them onto 4xx/5xx responses, so raising the right subclass matters.
"""


class SmoothMcError(Exception):
    """Base class for all errors raised by this package."""


class ModelSyntaxError(SmoothMcError):
    """Model source could not be parsed."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"line {line}" + (f", col {column}" if column is not None else "") + f": {message}"
        super().__init__(message)


class ModelValidationError(SmoothMcError):
    """One or more model invariants are violated.

    ``violations`` lists every problem found, not just the first.
    """

    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class FormulaSyntaxError(SmoothMcError):
    """Property source could not be parsed."""

    def __init__(self, message: str, position: int | None = None):
        self.position = position
        if position is not None:
            message = f"at offset {position}: {message}"
        super().__init__(message)


class RateEvaluationError(SmoothMcError):
    """A rate expression produced a negative, NaN or infinite value."""


class SimulationError(SmoothMcError):
    """Trajectory sampling failed (bad rate, guard exceeded, negative count)."""


class MonitorError(SmoothMcError):
    """A formula cannot be evaluated on the given trajectory."""


class InferenceError(SmoothMcError):
    """GP fitting or prediction failed."""
