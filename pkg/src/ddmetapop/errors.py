"""Exception hierarchy shared by every module."""


class MetapopError(Exception):
    """Base class for all package errors."""


class ConfigurationError(MetapopError, ValueError):
    """Invalid model, scenario or parameter specification."""


class DomainError(MetapopError, ValueError):
    """A density argument lies outside the domain of a map or dispersal function."""


class NumericalError(MetapopError, ArithmeticError):
    """A numerical procedure failed."""


class ConvergenceError(NumericalError):
    """An iterative method did not converge.

    Attributes:
        residual: last residual reached before giving up.
        bounds: optional (lower, upper) bracket that is still valid.
    """

    def __init__(self, message, residual=None, bounds=None):
        super().__init__(message)
        self.residual = residual
        self.bounds = bounds


class SimulationDiverged(NumericalError):
    """A trajectory produced a non-finite or negative state."""

    def __init__(self, message, step):
        super().__init__(message)
        self.step = step
