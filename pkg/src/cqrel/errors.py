class CqrelError(Exception):
    """Base class for errors raised by this package."""


class ValidationError(CqrelError, ValueError):
    """Input fails a construction check (shape, positivity, trace, stochasticity)."""


class DimensionCapError(CqrelError):
    """A tensor-product dimension would exceed the configured cap."""


class SpectralError(CqrelError, ArithmeticError):
    """An eigen- or singular-value solver did not converge."""


class OptimizationError(CqrelError, ArithmeticError):
    """An objective returned a non-finite value during optimization."""


class ConjectureModeError(CqrelError):
    """A bound outside the proved parameter regime was requested without opting in."""
