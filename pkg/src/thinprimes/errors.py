"""Exception hierarchy shared by the library and the command line front end."""


class ThinPrimesError(Exception):
    """Base class for all library errors."""

    exit_code = 1


class ConfigError(ThinPrimesError, ValueError):
    """Invalid parameters or configuration (bad ranges, malformed input)."""

    exit_code = 2


class NumericDomainError(ThinPrimesError, ArithmeticError):
    """An argument lies outside the domain where a quantity is defined."""

    exit_code = 3


class InvariantViolation(ThinPrimesError, AssertionError):
    """A built-in consistency check failed while running a computation."""

    exit_code = 4
