"""Exception hierarchy shared by every module of the package."""


class ThreeHalvesError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(ThreeHalvesError, ValueError):
    """An input lies outside the domain where the model or formula is defined."""


class FellerViolation(DomainError):
    """kappa <= -epsilon**2 / 2, so the variance process may explode."""


class NonPositiveSample(DomainError):
    """A quadrature sample of the inverse variance is not strictly positive."""


class OddSubintervals(DomainError):
    """Simpson's 1/3 rule was requested with an odd number of subintervals."""


class NonPositiveU(DomainError):
    """The inverse variance entering a stock or likelihood step is <= 0."""


class EmptyPathSet(ThreeHalvesError, ValueError):
    """A price estimate was requested from zero simulated paths."""


class ConfigError(ThreeHalvesError, ValueError):
    """An experiment configuration is invalid.

    Attributes:
        field: name of the offending configuration key (``None`` if global).
    """

    def __init__(self, message: str, field: str | None = None):
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)


class NumericalFailure(ThreeHalvesError, ArithmeticError):
    """A simulated path produced NaN or infinite values."""
