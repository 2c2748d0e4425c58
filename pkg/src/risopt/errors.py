"""Shared error taxonomy.

Every failure the package raises deliberately is one of these classes, so
callers (and the CLI exit-code mapping) can distinguish bad inputs from
numerical breakdowns.
"""


class RisoptError(Exception):
    """Base class for all package errors."""


class DimensionError(RisoptError):
    """Operands have incompatible sizes (e.g. vector length vs tensor axis)."""


class ShapeError(RisoptError):
    """An array has the wrong rank or an unexpected axis layout."""


class DomainError(RisoptError):
    """A value is outside the mathematical domain an operation requires
    (non-Hermitian where Hermitian is required, non-positive noise power...)."""


class DegenerateError(RisoptError):
    """The input is degenerate in a way that makes the result undefined
    (all-zero channel where a beamformer must be normalized, ...)."""


class NumericalError(RisoptError):
    """A numerical invariant broke down at runtime (e.g. a denominator that
    must stay near 1 collapsed), indicating accumulated round-off or misuse."""


class ConfigError(RisoptError):
    """A configuration file, key, or sweep specification is invalid."""


class InternalError(RisoptError):
    """A bug guard: an internal precondition that user input cannot violate."""
