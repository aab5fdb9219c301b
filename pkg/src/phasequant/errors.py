"""Exception hierarchy shared by all phasequant modules."""


class PhaseQuantError(Exception):
    """Base class for errors raised by phasequant."""


class DomainError(PhaseQuantError, ValueError):
    """An argument lies outside the domain of the requested operation."""


class NumericError(PhaseQuantError, ArithmeticError):
    """A numerical routine failed to converge or produced non-finite values."""


class QuadratureError(NumericError):
    """Adaptive quadrature hit its subdivision cap before meeting tolerance.

    ``residual`` holds the largest remaining error estimate.
    """

    def __init__(self, message, residual):
        super().__init__(f"{message} (residual estimate {residual:.3e})")
        self.residual = residual


class UnattainableRateError(DomainError):
    """Requested rate is at or above the quantizer ceiling of b bits."""


class InsufficientDataError(PhaseQuantError, ValueError):
    """Too few usable points for a fit."""
