"""Exception types shared across the package."""


class EchoRoomError(Exception):
    """Base class for every error raised by this package."""


class NonConvexInput(EchoRoomError):
    """Vertex list is not a strictly convex counterclockwise polygon."""


class DegenerateEdge(EchoRoomError):
    """Two consecutive vertices are numerically coincident."""


class UnboundedRoom(EchoRoomError):
    """Wall half-planes do not close around a bounded region."""


class InvalidRoom(EchoRoomError):
    """Stored walls are inconsistent with a convex polygon boundary."""


class UnsupportedDimension(EchoRoomError):
    """Operation is implemented for 2-D rooms only."""


class PointOutsideRoom(EchoRoomError):
    """A measurement point is not strictly inside the room."""

    def __init__(self, index: int, message: str | None = None):
        self.index = index
        super().__init__(message or f"trajectory point {index} is not strictly inside the room")


class NegativeDistance(EchoRoomError):
    """A distance that must be nonnegative was negative."""


class MaskedInput(EchoRoomError):
    """Operation requires a fully observed echo matrix."""


class InsufficientObservations(EchoRoomError):
    """Too few observed entries in some row or column for completion."""


class InfeasibleCount(EchoRoomError):
    """Measurement count fails the degrees-of-freedom inequality."""


class AmbiguousConfiguration(EchoRoomError):
    """Echo data admits residual-equal, non-congruent reconstructions."""


class InconsistentData(EchoRoomError):
    """No parameters reproduce the echo matrix within tolerance."""


class NoConvergence(EchoRoomError):
    """Iteration budget exhausted without meeting the convergence test."""


class DegenerateShear(EchoRoomError):
    """Requested parallelogram family collapses to a degenerate map."""


class PointLeftRoom(EchoRoomError):
    """A trajectory point falls outside one of the paired rooms."""

    def __init__(self, index: int, message: str | None = None):
        self.index = index
        super().__init__(message or f"trajectory point {index} left the room")


class LabelMismatch(EchoRoomError):
    """Wall labels or counts of two configurations do not agree."""
