"""Exception types shared across the package."""


class KscontrolError(Exception):
    """Base class for all package errors."""


class InvalidDomainError(KscontrolError):
    """Domain / control-region geometry violates a precondition."""


class InvalidArgumentError(KscontrolError):
    """An argument is outside its documented range."""


class BlowUpError(KscontrolError):
    """Forward solve exceeded the blow-up guard.

    Carries the time index of the first offending slice.
    """

    def __init__(self, message: str, time_index: int):
        super().__init__(message)
        self.time_index = time_index


class NumericalFailureError(KscontrolError):
    """Non-finite intermediate detected; ``stage`` names where."""

    def __init__(self, message: str, stage: str):
        super().__init__(message)
        self.stage = stage


class CGStagnationError(KscontrolError):
    """Conjugate gradient stalled; carries the residual history."""

    def __init__(self, message: str, history):
        super().__init__(message)
        self.history = list(history)


class NotConvergedError(KscontrolError):
    """Iteration cap reached; ``partial`` holds the best result so far."""

    def __init__(self, message: str, partial=None):
        super().__init__(message)
        self.partial = partial


class DegenerateWeightError(KscontrolError):
    """Weighted integral underflowed to zero for nonzero data (s too large for the mesh)."""


class InvalidIterateError(KscontrolError):
    """Fixed-point iterate left the unit sup-norm ball."""


class ConfigError(KscontrolError):
    """Configuration text could not be parsed or validated.

    ``line`` is the 1-based offending line number, 0 when not line-specific.
    """

    def __init__(self, message: str, line: int = 0):
        super().__init__(message)
        self.line = line
