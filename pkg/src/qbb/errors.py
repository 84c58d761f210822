"""Exception hierarchy.

Every error raised on purpose by the package derives from :class:`QbbError`,
so callers can catch the whole family in one place. Errors that describe a bad
argument also derive from :class:`ValueError`.
"""

__all__ = [
    "QbbError",
    "InvalidOperator",
    "NotPSD",
    "UnsupportedMoment",
    "DomainError",
    "InvalidOrder",
    "PriorError",
    "ModelError",
    "ParseError",
    "IntegrationError",
    "DegenerateModel",
    "InvalidPovm",
    "ResourceLimit",
    "SdpError",
    "MaxIters",
    "Infeasible",
]


class QbbError(Exception):
    """Base class for package errors."""


class InvalidOperator(QbbError, ValueError):
    """Operator is not finite, not square, or not Hermitian within tolerance."""


class NotPSD(QbbError, ValueError):
    """Operator has an eigenvalue below the allowed negative slack."""


class UnsupportedMoment(QbbError, ValueError):
    """A moment operator has weight outside the support of the reference state."""


class DomainError(QbbError, ValueError):
    """Argument outside the domain of a special function or formulation."""


class InvalidOrder(QbbError, ValueError):
    """Quadrature order must be a positive integer."""


class PriorError(QbbError, ValueError):
    """Prior specification cannot be normalised."""


class ModelError(QbbError, ValueError):
    """Model produces unphysical states or inconsistent data."""


class ParseError(QbbError, ValueError):
    """Malformed input file. Carries ``line`` and ``field`` when known."""

    def __init__(self, message, line=None, field=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
        self.line = line
        self.field = field


class IntegrationError(QbbError, RuntimeError):
    """Quadrature result is unusable."""


class DegenerateModel(QbbError, ValueError):
    """SPM loss vanishes, so the incompatibility ratio is undefined."""


class InvalidPovm(QbbError, ValueError):
    """POVM elements are not PSD, do not resolve the identity, or lack estimates."""


class ResourceLimit(QbbError, ValueError):
    """Requested object would be too large to build."""


class SdpError(QbbError, RuntimeError):
    """Base class for solver failures. ``solution`` holds the last iterate."""

    def __init__(self, message, solution=None):
        super().__init__(message)
        self.solution = solution


class MaxIters(SdpError):
    """Interior-point method stopped before meeting its tolerances."""


class Infeasible(SdpError):
    """Solver found a certificate that the constraints cannot be met."""
