"""Exception types shared across the package."""


class ResourceLimitError(RuntimeError):
    """Raised when an exhaustive computation would exceed its size guard."""


class DegenerateChainError(ValueError):
    """Raised when a Markov chain has no unique stationary distribution."""


class ConvergenceError(RuntimeError):
    """Raised when the exponent optimizer fails to converge.

    Carries the best value and stationarity residual seen so far, so a
    caller can decide whether the partial answer is usable.
    """

    def __init__(self, message, best_value=None, residual=None):
        super().__init__(message)
        self.best_value = best_value
        self.residual = residual
