"""Exception hierarchy shared by all rankdist modules."""


class RankDistError(Exception):
    """Base class for every error raised by rankdist."""


class DimensionError(RankDistError, ValueError):
    """Arrays that must have the same length do not."""


class DomainError(RankDistError, ValueError):
    """An argument lies outside the domain where a formula is defined."""


class DataError(RankDistError, ValueError):
    """Input data is empty, malformed or otherwise unusable."""


class CapExceededError(RankDistError, ValueError):
    """An exact computation would exceed its configured size cap."""

    def __init__(self, message, size=None, cap=None):
        super().__init__(message)
        self.size = size
        self.cap = cap


class SolverError(RankDistError, RuntimeError):
    """A root finder failed to converge or to bracket a root."""

    def __init__(self, message, bracket=None):
        super().__init__(message)
        self.bracket = bracket


class DegenerateError(RankDistError, ValueError):
    """The constraint set collapses onto a single corner state."""


class FitError(RankDistError, RuntimeError):
    """Curve fitting cannot proceed on the given data."""
