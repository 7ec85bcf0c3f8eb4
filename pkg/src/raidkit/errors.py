"""Exception types shared across the package."""


class ContractViolation(ValueError):
    """An argument failed a documented precondition."""


class ConvergenceError(RuntimeError):
    """An iterative routine hit its iteration cap before reaching tolerance.

    Carries the best estimate obtained so far and the last measured
    residual, so callers can decide whether the estimate is usable.
    """

    def __init__(self, message, estimate=None, residual=None):
        super().__init__(message)
        self.estimate = estimate
        self.residual = residual


class DataFormatError(ValueError):
    """An input file does not match its documented format."""
