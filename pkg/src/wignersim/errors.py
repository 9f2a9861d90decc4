"""Exception hierarchy for wignersim."""


class WignerSimError(Exception):
    """Base class for all library errors."""


class DimensionNotOddPrime(WignerSimError, ValueError):
    pass


class ShapeMismatch(WignerSimError, ValueError):
    pass


class ImagResidueTooLarge(WignerSimError, ValueError):
    pass


class NotTracePreserving(WignerSimError, ValueError):
    pass


class NotCompletelyPositive(WignerSimError, ValueError):
    pass


class NotUnitary(WignerSimError, ValueError):
    pass


class NotStochastic(WignerSimError, ValueError):
    pass


class NotSymplectic(WignerSimError, ValueError):
    pass


class SupportError(WignerSimError, ValueError):
    pass


class SupportOutOfRange(SupportError):
    pass


class DuplicateSite(SupportError):
    pass


class NotResolutionOfIdentity(WignerSimError, ValueError):
    pass


class NotPositiveSemidefinite(WignerSimError, ValueError):
    pass


class NotDensityMatrix(WignerSimError, ValueError):
    pass


class NegativeTable(WignerSimError, ValueError):
    pass


class NotNormalized(WignerSimError, ValueError):
    pass


class NegativeEntry(WignerSimError, ValueError):
    pass


class NotSamplable(WignerSimError, RuntimeError):
    pass


class TooLarge(WignerSimError, RuntimeError):
    pass


class ParseError(WignerSimError, ValueError):
    """Malformed circuit document.

    ``where`` is a field path such as ``gates[2].support`` or a
    ``line N, column M`` location for syntax errors.
    """

    def __init__(self, message: str, where: str | None = None):
        self.where = where
        super().__init__(f"{where}: {message}" if where else message)
