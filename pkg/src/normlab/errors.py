"""Exception types shared across the package."""

from __future__ import annotations


class NormLabError(Exception):
    """Base class for all structured errors raised by normlab."""


class DimensionMismatchError(NormLabError):
    """An input vector/matrix does not match the expected dimension."""

    def __init__(self, message: str, *, expected: int | None = None, got: int | None = None):
        super().__init__(message)
        self.expected = expected
        self.got = got


class NonFiniteInputError(NormLabError):
    """An input contains NaN or infinite entries."""


class ZeroVectorError(NormLabError):
    """A family vector is zero (or below the rejection tolerance)."""

    def __init__(self, message: str, *, index: int):
        super().__init__(message)
        self.index = index


class CapacityError(NormLabError):
    """A requested computation exceeds a configured size cap."""


class CoveringViolationError(NormLabError):
    """A net claimed as covering failed to cover a direction.

    Informative rather than fatal: ``witness`` is a unit vector that the
    net misses, usable as a fresh net candidate.
    """

    def __init__(self, message: str, *, witness, step: int, distance: float):
        super().__init__(message)
        self.witness = witness
        self.step = step
        self.distance = distance


class ConfigError(NormLabError):
    """An experiment configuration failed to parse or validate."""

    def __init__(self, message: str, *, field: str | None = None, path: str | None = None):
        super().__init__(message)
        self.field = field
        self.path = path
