"""Exception hierarchy.

Two families: ``ValidationError`` for bad inputs (CLI exit code 1) and
``NumericalError`` for computations that cannot produce a value (exit code 2).
"""


class SfwmError(Exception):
    """Base class for all package errors."""


class ValidationError(SfwmError, ValueError):
    pass


class NumericalError(SfwmError, ArithmeticError):
    pass


class InvalidParameterError(ValidationError):
    pass


class ParseError(ValidationError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DataError(ValidationError):
    pass


class OutOfRangeError(ValidationError):
    pass


class InvalidGeometryError(ValidationError):
    pass


class DispersionValidityError(ValidationError):
    """Frequency outside the declared span of a Taylor dispersion model."""


class EnergyConservationError(ValidationError):
    """wp1 + wp2 != ws + wi beyond the allowed snapping tolerance."""


class AsymptoticValidityError(ValidationError):
    """Closed form used outside its asymptotic regime (interval >= 10 sigma_p)."""


class InvalidStateError(ValidationError):
    pass


class InvalidSettingsError(ValidationError):
    pass


class ResolutionError(NumericalError):
    pass


class DegenerateInputError(NumericalError):
    pass


class UndefinedCARError(NumericalError):
    pass


class BracketError(NumericalError):
    pass


class UndefinedEstimatorError(NumericalError):
    pass


class UndefinedVisibilityError(NumericalError):
    pass
