"""Exception types shared across the package."""


class InvalidArgument(ValueError):
    """Raised when an input violates a documented precondition."""


class NumericFailure(RuntimeError):
    """An iterative routine failed to converge within its iteration cap.

    Carries the best available estimate so callers can inspect partial
    results.
    """

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


class StepBudgetExceeded(RuntimeError):
    """An inner-solve step count exceeded the configured safety ceiling."""


class InfeasibleSample(RuntimeError):
    """A sampled second-stage problem was infeasible or unbounded."""


class PreflightFailure(RuntimeError):
    """Contraction preflight failed and the run was not forced."""
