"""Exception types shared across the package."""


class DomainError(ValueError):
    """A potential was sampled where it is not finite or not defined."""


class ChainConvergenceError(RuntimeError):
    """The renormalized chain sum did not settle before its cutoff."""

    def __init__(self, message, last, previous):
        super().__init__(message)
        self.last = last
        self.previous = previous


class ResourceError(RuntimeError):
    """A requested grid or dense matrix exceeds the configured size cap."""


class UsageError(ValueError):
    """An operation was called outside its preconditions."""
