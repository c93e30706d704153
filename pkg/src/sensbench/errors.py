"""Exception types raised across the package."""


class SensBenchError(Exception):
    """Base class for all package errors."""


class InvalidDimension(SensBenchError, ValueError):
    pass


class DomainError(SensBenchError, ValueError):
    """An input point lies outside the unit hypercube."""


class UnsupportedDimension(SensBenchError, ValueError):
    """Requested Sobol' dimension exceeds the direction-number table."""


class DegenerateVariance(SensBenchError, ArithmeticError):
    """Output variance is zero, so variance shares are undefined."""


class InvalidPair(SensBenchError, ValueError):
    pass


class InvalidReplicates(SensBenchError, ValueError):
    pass


class TooFewPoints(SensBenchError, ValueError):
    pass


class IllConditioned(SensBenchError, ArithmeticError):
    """Correlation matrix could not be factorized even at the nugget cap."""


class IncompleteCell(SensBenchError, KeyError):
    """A grid cell lacks a result for one or more required methods."""

    def __init__(self, missing):
        self.missing = list(missing)
        super().__init__(f"incomplete cells: {self.missing}")

    def __str__(self):
        return f"incomplete cells: {self.missing}"
