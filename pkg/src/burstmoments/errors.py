"""Exception types shared across the package."""


class BurstMomentsError(Exception):
    """Base class for all package errors."""


class ConfigError(BurstMomentsError, ValueError):
    """Invalid run configuration or model parameter."""


class InvalidParam(ConfigError):
    """A model parameter is outside its admissible range.

    Attributes
    ----------
    field : str
        Name of the offending parameter.
    """

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class NumericalError(BurstMomentsError, ArithmeticError):
    """A numerical routine could not deliver a trustworthy result."""


class NonConvergent(NumericalError):
    pass


class BinomialOverflow(NumericalError):
    pass


class UnstableSeries(NumericalError):
    pass


class DegenerateVariance(NumericalError):
    pass


class WrongRateKind(BurstMomentsError, TypeError):
    pass


class NotDifferentiable(WrongRateKind):
    pass


class NotHurwitz(NumericalError):
    pass


class GridTooSmall(NumericalError):
    """Too much probability lies outside the truncation grid.

    ``axis`` is "a" or "b", naming the dimension that needs enlarging.
    """

    def __init__(self, message, axis="b"):
        self.axis = axis
        super().__init__(message)


class GridTooLarge(NumericalError):
    pass


class NonConverged(NumericalError):
    pass


class SimulationError(NumericalError):
    pass
