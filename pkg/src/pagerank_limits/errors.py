"""Exception hierarchy shared across the package."""


class PagerankLimitsError(Exception):
    """Base class for all package errors."""


class InputError(PagerankLimitsError):
    """Malformed user input (edge lists, vertex ids, file contents)."""


class ConfigError(PagerankLimitsError):
    """Invalid configuration or parameter combination."""


class ConvergenceError(PagerankLimitsError):
    """Fixed-point iteration exhausted max_iter without converging."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class InvariantViolation(PagerankLimitsError):
    """A mathematical invariant failed; indicates a solver or generator bug."""


class SizeError(PagerankLimitsError):
    """Input exceeds a configured size limit."""


class ResourceError(PagerankLimitsError):
    """A simulation exceeded its resource cap (e.g. runaway population)."""


class UsageError(PagerankLimitsError):
    """An operation was called with arguments outside its contract."""
