"""Exception hierarchy shared by every module."""

from __future__ import annotations


class AmalgamError(Exception):
    """Base class for all library errors."""


class InvalidInputError(AmalgamError, ValueError):
    """Malformed or out-of-contract input."""


class UnsupportedError(AmalgamError):
    """The operation is not defined for this input (e.g. axiom (4) in example2)."""


class ResourceLimitError(AmalgamError):
    """Enumeration would exceed the configured size cap.

    ``partial`` carries a sound under-approximation when one is available.
    """

    def __init__(self, message: str, partial=None):
        super().__init__(message)
        self.partial = partial


class NoExtensionError(AmalgamError):
    """No elementary extension exists; ``triangle`` names the violated equation."""

    def __init__(self, message: str, triangle=None):
        super().__init__(message)
        self.triangle = triangle


class ObstructionError(AmalgamError):
    """A correction system has no solution at the named face."""

    def __init__(self, message: str, face=None, triangle=None):
        super().__init__(message)
        self.face = face
        self.triangle = triangle


class InternalInvariantError(AmalgamError):
    """Something that the construction guarantees did not hold."""
