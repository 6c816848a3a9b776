"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: input problems exit 2, numerical
failures exit 3, configuration problems exit 4.
"""


class CondchartsError(Exception):
    """Base class for all package-specific errors."""


class InputError(CondchartsError):
    """Invalid user-supplied data (bad values, shapes, preconditions)."""


class DomainError(InputError):
    """A time point lies outside the fitted spline domain."""


class ParseError(InputError):
    """Malformed input file; carries a line number when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class NumericalError(CondchartsError):
    """A numerical procedure failed (solver breakdown, singularity)."""


class CollinearityError(NumericalError):
    """A design matrix is rank deficient or a test variance is singular."""


class FitError(CondchartsError):
    """Model fitting is impossible on the given data."""


class ConfigError(CondchartsError):
    """Invalid run configuration (flags or config file)."""
