"""Exception types shared across the package."""


class Trojan2eError(Exception):
    """Base class for all domain errors raised by this package."""


class InvalidParameterError(Trojan2eError, ValueError):
    """A parameter set violates its invariants."""


class SingularConfigurationError(Trojan2eError):
    """Two particles coincide (electron-nucleus or electron-electron)."""


class NotAnEquilibriumError(Trojan2eError):
    """A configuration fails the zero-gradient check."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class EquilibriumNotFoundError(Trojan2eError):
    """A constructor could not locate the requested equilibrium."""


class RankDeficiencyError(Trojan2eError):
    """Newton step blocked by a singular Hessian."""


class ConvergenceError(Trojan2eError):
    """An iteration hit its cap before meeting tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class CollisionError(Trojan2eError):
    """Trajectory came within the collision distance of another particle."""

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class IntegrationError(Trojan2eError):
    """The ODE solver failed to reach the requested tolerance."""


class UnsupportedRegimeError(Trojan2eError):
    """The requested parameters lie outside what the DMC solver handles."""


class PopulationControlError(Trojan2eError):
    """DMC walker population collapsed or exploded."""
