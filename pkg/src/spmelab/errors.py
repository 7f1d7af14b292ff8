"""Exception hierarchy shared by every spmelab module."""


class SpmeError(Exception):
    """Base class for all spmelab errors."""


class InvalidArgument(SpmeError, ValueError):
    pass


class OutOfRange(SpmeError, ValueError):
    pass


class OutOfHorizon(SpmeError, ValueError):
    """Raised when a barrier is evaluated at or beyond its blow-up time."""


class DomainMarginError(SpmeError, ValueError):
    """A dilated support set reached the Dirichlet boundary."""


class DegenerateCoefficient(SpmeError, ValueError):
    pass


class ExpressionError(SpmeError, ValueError):
    """Coefficient expression failed to parse or uses a forbidden construct.

    ``position`` is the zero-based column of the offending token.
    """

    def __init__(self, message: str, source: str, position: int):
        self.message = message
        self.source = source
        self.position = position
        pointer = " " * position + "^"
        super().__init__(f"{message} at column {position}\n  {source}\n  {pointer}")


class SolverDivergence(SpmeError, RuntimeError):
    def __init__(self, message: str, step: int):
        self.step = step
        super().__init__(f"{message} (step {step})")


class NumericalBlowup(SpmeError, FloatingPointError):
    def __init__(self, message: str, step: int):
        self.step = step
        super().__init__(f"{message} (step {step})")


class ContainmentFailure(SpmeError, RuntimeError):
    def __init__(self, message: str, diagnostics: dict | None = None):
        self.diagnostics = diagnostics or {}
        super().__init__(message)


class InsufficientData(SpmeError, ValueError):
    pass
