"""Exception hierarchy.

The CLI maps each family onto its own exit code, so keep new exceptions
inside one of the three branches below.
"""


class XrayLimitsError(Exception):
    """Base class for every error raised by this package."""


# -- validation / configuration ---------------------------------------------

class ValidationError(XrayLimitsError, ValueError):
    """Input violates a documented precondition or invariant."""


class DomainError(ValidationError):
    """Argument outside the domain where a formula is defined."""


class ConfigError(ValidationError):
    """Bad or missing configuration value."""


class SpectrumParseError(ValidationError):
    """A spectrum file could not be parsed."""

    def __init__(self, message, line=None, row=None):
        self.line = line
        self.row = row
        where = []
        if row is not None:
            where.append(f"row {row}")
        if line is not None:
            where.append(f"line {line}")
        if where:
            message = f"{', '.join(where)}: {message}"
        super().__init__(message)


class SpectrumValidationError(SpectrumParseError):
    """A spectrum parsed but breaks a bin invariant."""


class EmptyRangeError(ValidationError):
    """An energy window selected no bins."""


class BinningMismatchError(ValidationError):
    """Two spectra that must share binning do not."""


# -- numerical ---------------------------------------------------------------

class FitError(XrayLimitsError, ArithmeticError):
    """The fit is degenerate or numerically undefined."""
