"""Exception types shared by all engines."""
from __future__ import annotations


class BellLabError(Exception):
    """Base class for every error raised by this package."""


class DimensionMismatch(BellLabError):
    """Objects built over different scenarios were combined."""


class CapExceeded(BellLabError):
    """An enumeration would exceed the configured strategy cap."""


class OutOfRange(BellLabError):
    """A numeric argument lies outside its documented domain."""


class NumericalFailure(BellLabError):
    """A solver could not settle a decision at the working tolerance."""


class NotCovariant(BellLabError):
    """A frame-indexed model failed the covariance condition."""


class SeedStarvation(BellLabError):
    """A composition stage demands more input bits than are available.

    ``stage_index`` is 1-based, matching the ledger numbering.
    """

    def __init__(self, stage_index: int, needed: float, available: float):
        self.stage_index = stage_index
        self.needed = needed
        self.available = available
        super().__init__(
            f"stage {stage_index} needs {needed} input bits "
            f"but only {available} are available"
        )
