"""Exception hierarchy shared by every module."""
from __future__ import annotations


class ExplabError(Exception):
    """Base class for all errors raised by explab."""


class ParameterError(ExplabError, ValueError):
    """A constructor or operation received parameters it cannot honour."""


class NumericalDomainError(ExplabError):
    """A computation left the region where it is defined."""


class DomainError(NumericalDomainError, ValueError):
    """A point lies outside the domain of the object it was given to."""


class SingularityError(NumericalDomainError, ValueError):
    """Evaluation was requested at a declared singular point."""


class OrbitExit(NumericalDomainError):
    """A base-map orbit left a base space that is not invariant."""

    def __init__(self, message: str, index: int):
        super().__init__(message)
        self.index = index


class EscapeError(NumericalDomainError):
    """An integrator stage point left the domain.

    ``stage`` is the Runge-Kutta stage (1-4, or 0 for the accepted
    point), ``point`` the offending coordinates and ``partial`` whatever
    had been computed before the escape (a trajectory or ``None``).
    """

    def __init__(self, message: str, stage: int, point, partial=None):
        super().__init__(message)
        self.stage = stage
        self.point = point
        self.partial = partial


class ConfigError(ExplabError, ValueError):
    """An experiment configuration is malformed."""

    def __init__(self, message: str, path: str = ""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path
