"""Exception types shared across the package."""


class SbimError(Exception):
    """Base class for all package errors."""


class DimensionError(SbimError, ValueError):
    """Input vector length does not match the objective dimension."""


class ConfigError(SbimError, ValueError):
    """Invalid parameter or experiment configuration."""


class SolverError(SbimError, RuntimeError):
    """An implicit-equation or proximal solve failed to converge.

    Carries the last residual norm so callers can report how close the
    solve got before giving up.
    """

    def __init__(self, message: str, residual: float = float("nan")):
        super().__init__(message)
        self.residual = residual


class StateError(SbimError, RuntimeError):
    """The swarm reached an invalid state (e.g. no live agents)."""
