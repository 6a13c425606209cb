"""Exception hierarchy shared by all modules."""


class MoutardLabError(Exception):
    """Base class for every error raised by the library."""


class ConfigError(MoutardLabError, ValueError):
    """Invalid grid, builder or scenario configuration."""


class NumericalRefusal(MoutardLabError):
    """A computation refused to proceed on numerically unsound input."""

    reason = "numerical-refusal"


class SingularFieldError(NumericalRefusal):
    """A per-node matrix that must be inverted is singular or ill conditioned."""

    reason = "singular-field"

    def __init__(self, message, report=None, reason=None):
        super().__init__(message)
        self.report = report
        if reason is not None:
            self.reason = reason


class ContractionError(NumericalRefusal):
    """The a-priori contraction estimate for a fixed-point solve is too large."""

    reason = "non-contraction"


class ConvergenceError(NumericalRefusal):
    """A fixed-point iteration did not reach its tolerance."""

    reason = "non-convergence"

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = list(history or [])
