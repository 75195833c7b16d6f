"""Exception hierarchy shared by every module.

The CLI maps these onto exit codes: configuration problems exit 2, numeric
failures exit 3, support-gate violations exit 4.
"""


class LowZerosError(Exception):
    """Base class for all package errors."""

    exit_code = 3


class ConfigError(LowZerosError, ValueError):
    exit_code = 2


class ModulusOverflowError(LowZerosError, OverflowError):
    """Modulus exceeds the configured maximum."""

    exit_code = 2


class TableLimitError(LowZerosError, OverflowError):
    """Query beyond the limit of a prime table."""

    exit_code = 2


class NotPrimitiveError(LowZerosError, ValueError):
    pass


class PoleError(LowZerosError, ZeroDivisionError):
    pass


class AccuracyLossError(LowZerosError, ArithmeticError):
    """Euler-Maclaurin parameters cannot reach the requested accuracy."""


class IncompleteZeroSetError(LowZerosError, RuntimeError):
    """Located zeros disagree with the argument-principle count."""

    def __init__(self, message, gap=None, found=None, expected=None):
        super().__init__(message)
        self.gap = gap
        self.found = found
        self.expected = expected


class QuadratureError(LowZerosError, ArithmeticError):
    pass


class SupportConditionError(LowZerosError, ValueError):
    """Test function violates the support hypothesis of a prediction."""

    exit_code = 4


class DegenerateFitError(LowZerosError, ValueError):
    pass


class UnknownConstantError(LowZerosError, KeyError):
    exit_code = 2
