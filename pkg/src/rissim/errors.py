"""Exception and warning types raised by rissim."""


class RisError(Exception):
    """Base class for all rissim errors."""


class ZeroDistance(RisError, ValueError):
    pass


class TooCloseToElement(RisError, ValueError):
    """Observation point inside the element far-field guard.

    ``index`` is the offending element (or ``None`` for a lone radiator).
    """

    def __init__(self, message, index=None, distance=None):
        super().__init__(message)
        self.index = index
        self.distance = distance


class InvalidSpacing(RisError, ValueError):
    pass


class EmptyLayout(RisError, ValueError):
    pass


class InvalidAngle(RisError, ValueError):
    pass


class DimensionMismatch(RisError, ValueError):
    pass


class SingularMatrix(RisError, ArithmeticError):
    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class NotInFarField(RisError, ValueError):
    pass


class InvalidBits(RisError, ValueError):
    pass


class DegeneratePoint(RisError, ValueError):
    pass


class NonPlanarLayout(RisError, ValueError):
    pass


class ZeroNoise(RisError, ValueError):
    pass


class InsufficientSamples(RisError, ValueError):
    pass


class ConfigError(RisError, ValueError):
    """Bad user configuration; ``field`` names the offending key path."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class PolarAxisSingularity(RuntimeWarning):
    """Dipole pattern evaluated on its axis; the analytic limit 0 is used."""


class ApproximationOutOfRange(RuntimeWarning):
    """Closed-form Fresnel radius used outside its r >> l*lambda regime."""
