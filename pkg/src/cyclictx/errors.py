"""Exception hierarchy for cyclictx.

Every error raised by the public API derives from :class:`CyclicTxError`,
so callers can catch one base class at CLI or service boundaries.
"""

from __future__ import annotations


class CyclicTxError(Exception):
    """Base error for this package."""


class RankTooSmall(CyclicTxError, ValueError):
    """A cyclic system needs rank n >= 2."""


class OutOfRange(CyclicTxError, ValueError):
    """A probability or coordinate lies outside its admissible interval."""


class FrechetViolation(CyclicTxError, ValueError):
    """A context's pair probability violates its Fréchet bounds.

    The 2x2 joint distribution of that context does not exist.
    ``context`` is the 0-based context index.
    """

    def __init__(self, context: int, value: float, lo: float, hi: float) -> None:
        self.context = context
        self.value = value
        self.lo = lo
        self.hi = hi
        super().__init__(
            f"context {context}: pair probability {value} outside "
            f"Fréchet interval [{lo}, {hi}]"
        )


class DegenerateBox(CyclicTxError, ValueError):
    """Some box edge has zero length; the requested geometry is ill-defined."""


class CapExceeded(CyclicTxError, ValueError):
    """An enumeration would exceed the configured size cap."""


class DimensionCap(CyclicTxError, ValueError):
    """The rank exceeds the configured maximum for this solver."""


class SolverStall(CyclicTxError, RuntimeError):
    """The simplex iteration cap was hit before termination."""


class NotContextual(CyclicTxError, ValueError):
    """A contextuality measure was requested for a system inside the polytope."""


class NotNoncontextual(CyclicTxError, ValueError):
    """A noncontextuality measure was requested for a system outside the polytope."""


class DocumentError(CyclicTxError, ValueError):
    """A system document failed to parse or validate."""
