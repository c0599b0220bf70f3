class FactorizationError(ArithmeticError):
    """Gram matrix could not be factorized even after jitter escalation."""

    def __init__(self, message, pair=None, distance=None):
        super().__init__(message)
        self.pair = pair
        self.distance = distance


class PosteriorBreakdown(ArithmeticError):
    """Derivative posterior scale matrix is not positive definite at ``x_star``."""

    def __init__(self, x_star):
        super().__init__(f"derivative posterior covariance not positive definite at x*={list(x_star)}")
        self.x_star = x_star


class InitializationError(RuntimeError):
    """No starting point inside the prior support could be found."""


class StageFailure(RuntimeError):
    """A resampling stage could not proceed (every particle weight is -inf)."""
