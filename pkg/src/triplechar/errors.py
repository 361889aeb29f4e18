"""Exception types raised by the library."""


class TripleCharError(Exception):
    """Base class for all library errors."""


class NonConvergence(TripleCharError):
    """Root refinement could not reach the residual target."""


class NotHyperbolic(TripleCharError):
    """A polynomial expected to have only real roots has complex ones."""


class RootsNotSeparated(TripleCharError):
    """Roots are closer than the requested separation tolerance."""


class DimensionMismatch(TripleCharError, ValueError):
    pass


class EmptyFilteredSet(TripleCharError):
    """No grid point satisfies the side conditions of a positivity check."""


class StepSizeTooCoarse(TripleCharError):
    """Step-halving error estimate exceeds the accuracy budget."""

    def __init__(self, message, err_est=None, state_norm=None):
        super().__init__(message)
        self.err_est = err_est
        self.state_norm = state_norm


class CutoffOverlapInvalid(TripleCharError, ValueError):
    """The cutoff pair used for symbol extension does not cover the grid."""


class ExpressionError(TripleCharError, ValueError):
    """Parse or evaluation-setup failure in the symbol expression language."""

    def __init__(self, message, position=None, source=None):
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)
        self.position = position
        self.source = source


class ConfigError(TripleCharError, ValueError):
    """Experiment config is malformed."""
