# src/core/errors.py

"""Exception types shared by the numerical core and the command line."""


class GcdLabError(Exception):
    """Base class for every error raised by gcdlab."""

    exit_status = 1


class DomainError(GcdLabError, ValueError):
    """Input outside the mathematical domain of an operation."""

    exit_status = 3


class InfeasibleLevelError(DomainError):
    """Requested level is not attained by the quadratic functional."""


class InfeasibleCouplingError(DomainError):
    """Product of window primes exceeds n, so the CRT multiplier is zero."""


class PreconditionError(DomainError):
    """A bound's hypothesis does not hold; the message names the inequality."""


class UnsupportedCombinationError(DomainError):
    """Parameter combination with no known formula."""


class CapacityError(GcdLabError):
    """State space larger than the configured limit."""

    exit_status = 3


class UsageError(GcdLabError):
    """Invalid run configuration."""

    exit_status = 2


class OracleMismatchError(GcdLabError):
    """A --check brute-force gate disagreed with the fast path."""

    exit_status = 4
