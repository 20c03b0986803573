"""Exception hierarchy for survseg.

All fit-time failures derive from :class:`FitError` so callers (the sweep,
the bootstrap, the CLI) can catch one type and keep per-item bookkeeping.
"""


class SurvSegError(Exception):
    """Base class for all survseg errors."""


class DataError(SurvSegError, ValueError):
    """Invalid input data (bad column, non-finite value, entry > time, ...)."""


class PriorError(SurvSegError, ValueError):
    """Segmentation prior cannot support the requested number of segments."""


class FitError(SurvSegError, RuntimeError):
    """A model fit failed.

    Attributes
    ----------
    iteration : int or None
        EM iteration at which the failure occurred, set by the driver.
    """

    def __init__(self, message, iteration=None):
        super().__init__(message)
        self.iteration = iteration


class DegeneratePosteriorError(FitError):
    """Every segment assignment has probability zero at some position."""

    def __init__(self, position, iteration=None):
        super().__init__(f"posterior degenerate at position {position}", iteration)
        self.position = position


class SegmentCollapseError(FitError):
    """A segment lost all (weighted) events or exposure during the M-step."""

    def __init__(self, message, segment, iteration=None):
        super().__init__(message, iteration)
        self.segment = segment


class NewtonError(FitError):
    """Newton-Raphson failed to converge.

    Carries the last iterate and the gradient sup-norm reached.
    """

    def __init__(self, message, last_params=None, grad_norm=None, iteration=None):
        super().__init__(message, iteration)
        self.last_params = last_params
        self.grad_norm = grad_norm


class BootstrapError(SurvSegError, RuntimeError):
    """Too many bootstrap replicates failed to fit."""
