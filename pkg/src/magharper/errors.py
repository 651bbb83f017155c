"""Exception hierarchy shared by all modules.

The CLI maps these onto exit codes (domain 1, resource 2, numeric 3).
"""


class MagHarperError(Exception):
    """Base class."""


class DomainError(MagHarperError, ValueError):
    """Input outside an operation's domain (family mismatch, bad parameters)."""


class NotAmenableError(DomainError):
    """Følner data requested for a non-amenable group."""


class ResourceCapError(MagHarperError, RuntimeError):
    """An enumeration or matrix exceeded its configured cap."""


class NumericError(MagHarperError, ArithmeticError):
    """A numerical procedure failed to converge or certify."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class RelationNotFound(MagHarperError, LookupError):
    """No integer relation within the requested degree/height bounds.

    This says nothing about transcendence; it only means the bounds or the
    working precision were insufficient.
    """
