"""Core planar geometry: walls, rooms, trajectories, and rigid motions.

Rooms are stored wall-first in Hessian normal form ``<normal, x> = offset``
with outward unit normals; vertices are derived on demand.  All types are
immutable after construction (backing arrays are marked read-only), so they
can be shared freely between threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateEdge,
    InvalidRoom,
    NonConvexInput,
    UnboundedRoom,
    UnsupportedDimension,
)

UNIT_TOL = 1e-12
CONVEXITY_TOL = 1e-9
EDGE_TOL = 1e-9
VERTEX_TOL = 1e-9


def _readonly(values, shape=None) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if shape is not None and arr.shape != shape:
        raise ValueError(f"expected array of shape {shape}, got {arr.shape}")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class Wall:
    """A flat reflector ``{x : <normal, x> = offset}`` with unit outward normal.

    The offset is the signed distance of the wall plane from the origin; it is
    nonnegative whenever the origin lies inside the room, but rigid motions
    and vertex-based construction may legitimately produce negative offsets.
    """

    normal: np.ndarray
    offset: float

    def __post_init__(self):
        normal = _readonly(self.normal)
        if normal.ndim != 1 or normal.shape[0] not in (2, 3):
            raise ValueError("wall normal must be a 2- or 3-vector")
        if abs(np.linalg.norm(normal) - 1.0) > UNIT_TOL:
            raise ValueError("wall normal must have unit length within 1e-12")
        if not math.isfinite(self.offset):
            raise ValueError("wall offset must be finite")
        object.__setattr__(self, "normal", normal)
        object.__setattr__(self, "offset", float(self.offset))

    @property
    def dimension(self) -> int:
        return self.normal.shape[0]

    def point_on_plane(self) -> np.ndarray:
        """Any point of the wall plane (the foot of the origin's perpendicular)."""
        return self.offset * self.normal

    def signed_distance(self, point) -> float:
        """Distance from ``point`` to the plane, positive on the interior side."""
        return self.offset - float(np.dot(self.normal, np.asarray(point, dtype=float)))


@dataclass(frozen=True)
class Room:
    """An ordered list of walls bounding a convex polygon.

    Walls are expected in counterclockwise boundary order (consecutive walls
    share a vertex); this is what :func:`room_from_vertices` produces and what
    :func:`room_vertices` relies on.  Construction only checks cheap local
    invariants; geometric closure is validated where it matters.
    """

    walls: tuple[Wall, ...]
    dimension: int = 2
    labels: tuple[str, ...] = field(default=())

    def __post_init__(self):
        walls = tuple(self.walls)
        if len(walls) < 2:
            raise ValueError("a room needs at least two walls")
        if self.dimension not in (2, 3):
            raise ValueError("dimension must be 2 or 3")
        for w in walls:
            if w.dimension != self.dimension:
                raise ValueError("wall dimension does not match room dimension")
        labels = tuple(self.labels) if self.labels else tuple(f"wall-{j}" for j in range(len(walls)))
        if len(labels) != len(walls):
            raise ValueError("one label per wall required")
        object.__setattr__(self, "walls", walls)
        object.__setattr__(self, "labels", labels)

    @property
    def num_walls(self) -> int:
        return len(self.walls)

    def normal_matrix(self) -> np.ndarray:
        """Stack of outward unit normals, shape (K, d)."""
        return np.array([w.normal for w in self.walls])

    def offsets(self) -> np.ndarray:
        """Wall offsets, shape (K,)."""
        return np.array([w.offset for w in self.walls])

    def contains(self, point, tol: float = 0.0) -> bool:
        """True if ``point`` is strictly inside every wall half-plane by ``tol``."""
        p = np.asarray(point, dtype=float)
        return all(w.signed_distance(p) > tol for w in self.walls)


@dataclass(frozen=True)
class Trajectory:
    """Ordered measurement locations, shape (N, d)."""

    points: np.ndarray

    def __post_init__(self):
        points = np.atleast_2d(np.array(self.points, dtype=float))
        if points.ndim != 2 or points.shape[0] < 1 or points.shape[1] not in (2, 3):
            raise ValueError("trajectory must be an (N, 2) or (N, 3) array with N >= 1")
        if not np.all(np.isfinite(points)):
            raise ValueError("trajectory points must be finite")
        points.flags.writeable = False
        object.__setattr__(self, "points", points)

    @property
    def num_points(self) -> int:
        return self.points.shape[0]

    @property
    def dimension(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True)
class RigidMotion:
    """Orthogonal map plus translation, ``x -> rotation @ x + translation``."""

    rotation: np.ndarray
    translation: np.ndarray
    allow_reflection: bool = False

    def __post_init__(self):
        rot = _readonly(self.rotation)
        if rot.ndim != 2 or rot.shape[0] != rot.shape[1] or rot.shape[0] not in (2, 3):
            raise ValueError("rotation must be a 2x2 or 3x3 matrix")
        d = rot.shape[0]
        if np.max(np.abs(rot.T @ rot - np.eye(d))) > 1e-12:
            raise ValueError("rotation must be orthogonal within 1e-12")
        det = float(np.linalg.det(rot))
        if det < 0 and not self.allow_reflection:
            raise ValueError("reflection requires allow_reflection=True")
        trans = _readonly(self.translation, shape=(d,))
        object.__setattr__(self, "rotation", rot)
        object.__setattr__(self, "translation", trans)

    @classmethod
    def identity(cls, dimension: int = 2) -> "RigidMotion":
        return cls(np.eye(dimension), np.zeros(dimension))

    @classmethod
    def from_angle(cls, angle: float, translation=None, dimension: int = 2) -> "RigidMotion":
        if dimension != 2:
            raise UnsupportedDimension("angle construction is 2-D only")
        c, s = math.cos(angle), math.sin(angle)
        rot = np.array([[c, -s], [s, c]])
        t = np.zeros(2) if translation is None else np.asarray(translation, dtype=float)
        return cls(rot, t)

    def apply(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        return pts @ self.rotation.T + self.translation

    @property
    def is_reflection(self) -> bool:
        return float(np.linalg.det(self.rotation)) < 0

    def compose(self, other: "RigidMotion") -> "RigidMotion":
        """The motion `self after other` (apply ``other`` first)."""
        rot = self.rotation @ other.rotation
        trans = self.rotation @ other.translation + self.translation
        return RigidMotion(rot, trans, allow_reflection=self.allow_reflection or other.allow_reflection)


def room_from_vertices(vertices, labels=None) -> Room:
    """Build a 2-D room from a strictly convex counterclockwise vertex list.

    Wall ``j`` is the edge from vertex ``j`` to vertex ``j+1`` (cyclically);
    its outward normal is the edge direction rotated clockwise by 90 degrees.

    Raises
    ------
    DegenerateEdge
        If two consecutive vertices are closer than 1e-9.
    NonConvexInput
        If the polygon is not strictly convex or is ordered clockwise.
    """
    verts = np.atleast_2d(np.array(vertices, dtype=float))
    if verts.ndim != 2 or verts.shape[1] != 2:
        raise UnsupportedDimension("vertex construction is 2-D only")
    n = verts.shape[0]
    if n < 3:
        raise NonConvexInput("need at least three vertices")

    edges = np.roll(verts, -1, axis=0) - verts
    lengths = np.linalg.norm(edges, axis=1)
    short = np.nonzero(lengths < EDGE_TOL)[0]
    if short.size:
        raise DegenerateEdge(f"vertices {short[0]} and {(short[0] + 1) % n} nearly coincide")

    unit = edges / lengths[:, None]
    crosses = unit[:, 0] * np.roll(unit, -1, axis=0)[:, 1] - unit[:, 1] * np.roll(unit, -1, axis=0)[:, 0]
    if np.all(crosses < -CONVEXITY_TOL):
        raise NonConvexInput("vertices are ordered clockwise; counterclockwise required")
    if np.any(crosses < CONVEXITY_TOL):
        raise NonConvexInput("polygon is not strictly convex")

    walls = []
    for j in range(n):
        normal = np.array([unit[j, 1], -unit[j, 0]])
        walls.append(Wall(normal=normal, offset=float(np.dot(normal, verts[j]))))
    return Room(walls=tuple(walls), dimension=2, labels=tuple(labels) if labels else ())


def normal_angles(room: Room) -> np.ndarray:
    """Standard angles ``atan2(ny, nx)`` of the wall normals, shape (K,)."""
    normals = room.normal_matrix()
    return np.arctan2(normals[:, 1], normals[:, 0])


def wall_winding(room: Room) -> str:
    """Orientation of the stored wall order: ``"ccw"``, ``"cw"``, or ``"mixed"``.

    A counterclockwise boundary order means the outward-normal angles increase
    cyclically by the exterior angles (each in (0, pi), summing to 2*pi).
    """
    ang = normal_angles(room)
    diffs = np.mod(np.roll(ang, -1) - ang, 2.0 * math.pi)
    if np.all((diffs > 0) & (diffs < math.pi)) and abs(diffs.sum() - 2.0 * math.pi) < 1e-6:
        return "ccw"
    rev = np.mod(ang - np.roll(ang, -1), 2.0 * math.pi)
    if np.all((rev > 0) & (rev < math.pi)) and abs(rev.sum() - 2.0 * math.pi) < 1e-6:
        return "cw"
    return "mixed"


def _intersect_walls(wa: Wall, wb: Wall) -> np.ndarray:
    mat = np.array([wa.normal, wb.normal])
    det = mat[0, 0] * mat[1, 1] - mat[0, 1] * mat[1, 0]
    if abs(det) < 1e-14:
        raise UnboundedRoom("consecutive walls are parallel")
    rhs = np.array([wa.offset, wb.offset])
    return np.linalg.solve(mat, rhs)


def room_vertices(room: Room, strict: bool = True) -> np.ndarray:
    """Vertices of the room, shape (K, 2); vertex ``j`` joins walls ``j-1`` and ``j``.

    For rooms in counterclockwise wall order the result is a counterclockwise
    vertex list and ``room_from_vertices(room_vertices(r))`` round-trips.
    Clockwise-stored rooms (mirrored configurations) are handled symmetrically.

    With ``strict=True`` the half-plane arrangement is validated: the normals
    must positively span the plane (else the region is unbounded) and every
    derived vertex must satisfy every wall inequality (else some wall is not a
    face of the region).  ``strict=False`` only intersects consecutive walls,
    which is what error metrics on noisy reconstructions need.
    """
    if room.dimension != 2:
        raise UnsupportedDimension("vertices are only defined for 2-D rooms")
    k = room.num_walls

    if strict:
        ang = np.sort(normal_angles(room))
        gaps = np.diff(np.concatenate([ang, [ang[0] + 2.0 * math.pi]]))
        if gaps.max() >= math.pi - 1e-12:
            raise UnboundedRoom("wall normals do not positively span the plane")
        if wall_winding(room) == "mixed":
            raise InvalidRoom("walls are not stored in boundary order")

    verts = np.empty((k, 2))
    for j in range(k):
        verts[j] = _intersect_walls(room.walls[j - 1], room.walls[j])

    if strict:
        scale = max(1.0, float(np.max(np.abs(room.offsets()))))
        normals = room.normal_matrix()
        offsets = room.offsets()
        slack = verts @ normals.T - offsets[None, :]
        if slack.max() > VERTEX_TOL * scale:
            raise InvalidRoom("a derived vertex violates a wall half-plane; some wall is not a face")
    return verts


def apply_rigid_motion(room: Room, trajectory: Trajectory, motion: RigidMotion):
    """Move a room and trajectory by the same rigid motion.

    Normals rotate, offsets pick up ``<normal', t>``, and every wall-point
    distance is preserved, so the echo matrix is invariant entrywise.
    """
    rot, t = motion.rotation, motion.translation
    walls = []
    for w in room.walls:
        normal = rot @ w.normal
        walls.append(Wall(normal=normal, offset=w.offset + float(np.dot(normal, t))))
    new_room = Room(walls=tuple(walls), dimension=room.dimension, labels=room.labels)
    new_traj = Trajectory(points=motion.apply(trajectory.points))
    return new_room, new_traj


def gauge_normalize(room: Room, trajectory: Trajectory):
    """Rotate and translate so the first point is the origin and the first normal is (0, 1).

    This fixes the three rigid degrees of freedom of a 2-D configuration
    without changing any echo distance.  The map is proper (no reflection)
    and idempotent.
    """
    if room.dimension != 2 or trajectory.dimension != 2:
        raise UnsupportedDimension("gauge normalization is 2-D only")
    n1 = room.walls[0].normal
    angle = math.pi / 2.0 - math.atan2(n1[1], n1[0])
    rot = RigidMotion.from_angle(angle)
    r1 = trajectory.points[0]
    translation = -(rot.rotation @ r1)
    motion = RigidMotion(rot.rotation, translation)
    return apply_rigid_motion(room, trajectory, motion)
