"""Finite double-cover structures: closures, amalgamation checkers and groupoids."""

from .errors import (
    AmalgamError,
    InternalInvariantError,
    InvalidInputError,
    NoExtensionError,
    ObstructionError,
    ResourceLimitError,
    UnsupportedError,
)
from .structure import EXAMPLE1, EXAMPLE2, Structure, Substructure, acl, dcl, eval_Q, validate_axioms

__all__ = [
    "AmalgamError", "InternalInvariantError", "InvalidInputError", "NoExtensionError",
    "ObstructionError", "ResourceLimitError", "UnsupportedError",
    "EXAMPLE1", "EXAMPLE2", "Structure", "Substructure", "acl", "dcl", "eval_Q", "validate_axioms",
]
