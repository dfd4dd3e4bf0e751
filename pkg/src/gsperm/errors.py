"""Exception hierarchy shared by all modules."""


class GSPermError(Exception):
    """Base class for package errors."""


class ValidationError(GSPermError, ValueError):
    """Invalid input: bad design, malformed data, broken contract."""


class DomainError(ValidationError):
    """Argument outside the mathematical domain of a function."""


class InvalidDataError(ValidationError):
    """Data that violates a structural requirement (ordering, counts, ratio)."""


class ContractError(ValidationError):
    """Mismatched lengths or other caller-side contract breaches."""


class EnumerationSizeError(ValidationError):
    """Exhaustive enumeration would exceed the configured cap."""


class DegenerateDataError(GSPermError, ArithmeticError):
    """Both arm variances are zero, so the studentized statistic is undefined.

    ``sign`` is the sign of the mean difference (-1, 0 or +1); ``look`` is the
    1-based look index when known.
    """

    def __init__(self, message, sign=0, look=None):
        super().__init__(message)
        self.sign = sign
        self.look = look


class NumericalError(GSPermError, ArithmeticError):
    """A numerical routine failed to converge."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
