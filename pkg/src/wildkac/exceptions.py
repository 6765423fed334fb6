"""Exception types raised by wildkac."""


class WildKacError(Exception):
    """Base class for all package errors."""


class ConfigurationError(WildKacError, ValueError):
    """Invalid kernel, distribution or run parameters.

    ``path`` holds the offending config key path when the error comes from a
    config file (e.g. ``"kernel.base.eta.p"``).
    """

    def __init__(self, message, path=None):
        self.path = path
        if path:
            message = f"{path}: {message}"
        super().__init__(message)


class UnsupportedMethodError(WildKacError):
    """A computation route (closed form, quadrature) is not available."""


class UndefinedMeanError(WildKacError):
    """The forced mean E[A0] / (1 - E[A1 + A2]) does not exist."""


class InfiniteMomentError(WildKacError):
    """The requested steady-state moment is infinite."""


class PreconditionError(WildKacError):
    """Hypotheses required for a contraction bound do not hold."""


class ResourceCapError(WildKacError):
    """A request exceeds a configured size cap."""


class ConvergenceWarning(UserWarning):
    """The steady-state solver stopped at ``max_iters`` without reaching ``tol``."""
