"""Exception hierarchy shared by the library and the CLI."""


class OUCalculusError(Exception):
    """Base class for all library errors."""


class ModelError(OUCalculusError, ValueError):
    """A model or matrix violates a stated precondition.

    ``invariant`` names the failing condition (``"symmetric"``, ``"spd"``,
    ``"drift_spectrum"``, ``"accretive"``, ...) so callers can report it.
    """

    def __init__(self, message, invariant=None):
        super().__init__(message)
        self.invariant = invariant


class SectorError(OUCalculusError, ValueError):
    """An angle lies outside the admissible sector."""


class SingularSetError(OUCalculusError, ValueError):
    """A base point lies on the set where the Bellman function is not C^2."""


class NumericalError(OUCalculusError, ArithmeticError):
    """Ill-conditioning or non-convergence of a numerical procedure."""


class ConfigError(OUCalculusError, ValueError):
    """Malformed experiment configuration."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field
