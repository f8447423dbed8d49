"""Exception types raised across the package."""


class CurvtestError(Exception):
    """Base class for all package errors."""


class ConformanceError(CurvtestError, ValueError):
    """An object does not belong to the declared space."""


class DegenerateVarianceError(CurvtestError):
    """The asymptotic variance estimate is zero or the dispersion vanishes.

    The normal approximation behind the test needs a strictly positive
    limiting variance, so no test statistic can be formed.
    """


class DisconnectedGraphError(CurvtestError):
    """The neighbourhood graph has more than one connected component."""

    def __init__(self, message, components, required_radius):
        super().__init__(message)
        self.components = components
        self.required_radius = required_radius


class ExtrapolationError(CurvtestError):
    """A representation point lies too far from every embedded sample."""
