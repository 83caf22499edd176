"""Constructive witnesses and detectors for non-unique echo configurations.

Two families of distinct configurations generate identical first-order echo
matrices: shears of a rectangular room (compensated by the inverse shear of
the trajectory), and reflections of the room across a straight-line
trajectory.  Both are built here exactly, together with a congruence
detector that certifies the members are not rigidly equivalent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateShear, LabelMismatch, PointLeftRoom, PointOutsideRoom
from .geometry import RigidMotion, Room, Trajectory, Wall, normal_angles
from .sim import EchoMatrix, SimConfig, echo_matrix

PAIR_TOL = 1e-12
CONGRUENCE_TOL = 1e-9


@dataclass(frozen=True)
class AmbiguousPair:
    """Two configurations with entrywise-identical echo matrices."""

    room_a: Room
    traj_a: Trajectory
    room_b: Room
    traj_b: Trajectory
    echo: EchoMatrix
    family: str
    family_parameter: float
    max_deviation: float


@dataclass(frozen=True)
class CongruenceResult:
    """Outcome of the rigid-congruence search."""

    congruent: bool
    motion: RigidMotion | None
    max_error: float

    @property
    def verdict(self) -> str:
        return "congruent" if self.congruent else "distinct"


def _unit(angle: float) -> np.ndarray:
    return np.array([math.cos(angle), math.sin(angle)])


def _classify_rectangle(room: Room):
    """Map each wall of an axis-aligned rectangle to its signed axis.

    Returns a list of (axis, sign) with axis 0 for +-e1 normals and 1 for
    +-e2; raises ValueError otherwise.
    """
    if room.dimension != 2 or room.num_walls != 4:
        raise ValueError("base room must be an axis-aligned rectangle with four walls")
    kinds = []
    seen = set()
    for w in room.walls:
        nx, ny = w.normal
        if abs(abs(nx) - 1.0) < 1e-9 and abs(ny) < 1e-9:
            kind = (0, 1 if nx > 0 else -1)
        elif abs(abs(ny) - 1.0) < 1e-9 and abs(nx) < 1e-9:
            kind = (1, 1 if ny > 0 else -1)
        else:
            raise ValueError("base room must be an axis-aligned rectangle (normals +-e1, +-e2)")
        if kind in seen:
            raise ValueError("duplicate wall orientation; base room is not a rectangle")
        seen.add(kind)
        kinds.append(kind)
    return kinds


def make_parallelogram_family(base: Room, traj: Trajectory, alpha: float, beta: float) -> AmbiguousPair:
    """Shear a rectangle room into a parallelogram without changing any echo.

    The linear map ``A`` is chosen so its transpose sends the vertical axis
    normal to the unit vector at angle ``alpha`` and the horizontal one to
    angle ``beta`` (radians).  Points move by ``A^{-1}`` while normals move
    by ``A^T``, which preserves every ``<r, n>`` product; offsets carry over
    unchanged, so all N*K distances match exactly.  ``alpha = pi/2``,
    ``beta = 0`` is the identity.

    Raises
    ------
    DegenerateShear
        If ``alpha - beta`` is a multiple of pi (the map collapses).
    PointLeftRoom
        If a mapped trajectory point is not strictly inside the sheared room
        (cannot occur when the input trajectory is strictly inside the base
        rectangle; kept as a defensive check).
    """
    kinds = _classify_rectangle(base)
    if abs(math.sin(alpha - beta)) < 1e-9:
        raise DegenerateShear("alpha - beta is a multiple of pi; the shear is singular")

    u_alpha = _unit(alpha)
    u_beta = _unit(beta)
    a_t = np.column_stack([u_beta, u_alpha])  # images of e1, e2 under A^T
    a_inv = np.linalg.inv(a_t.T)

    walls = []
    for w, (axis, sign) in zip(base.walls, kinds):
        normal = sign * (u_alpha if axis == 1 else u_beta)
        walls.append(Wall(normal=normal, offset=w.offset))
    room_b = Room(walls=tuple(walls), dimension=2, labels=base.labels)
    traj_b = Trajectory(points=traj.points @ a_inv.T)

    try:
        echo_a = echo_matrix(base, traj, SimConfig())
        echo_b = echo_matrix(room_b, traj_b, SimConfig())
    except PointOutsideRoom as exc:
        raise PointLeftRoom(exc.index) from exc
    deviation = float(np.max(np.abs(echo_a.entries - echo_b.entries)))
    return AmbiguousPair(
        room_a=base,
        traj_a=traj,
        room_b=room_b,
        traj_b=traj_b,
        echo=echo_a,
        family="parallelogram",
        family_parameter=alpha - beta,
        max_deviation=deviation,
    )


def make_collinear_family(room: Room, line_point, line_direction, offsets) -> AmbiguousPair:
    """Reflect a room across a straight-line trajectory; echoes are unchanged.

    The trajectory points ``line_point + offset_k * direction`` are fixed by
    the reflection, and reflecting the walls preserves every point-to-wall
    distance along the line, so the original and mirrored rooms are
    indistinguishable from these measurements.  The pair is rigidly distinct
    unless the room happens to be symmetric about the line.

    Raises
    ------
    PointLeftRoom
        If some trajectory point is not strictly inside the room (points
        inside the original room are automatically inside the reflected one).
    """
    p0 = np.asarray(line_point, dtype=float)
    u = np.asarray(line_direction, dtype=float)
    norm = np.linalg.norm(u)
    if norm == 0:
        raise ValueError("line direction must be nonzero")
    u = u / norm
    perp = np.array([-u[1], u[0]])

    pts = p0[None, :] + np.asarray(offsets, dtype=float)[:, None] * u[None, :]
    traj = Trajectory(points=pts)
    for idx in range(traj.num_points):
        if not room.contains(traj.points[idx]):
            raise PointLeftRoom(idx)

    mirror = np.eye(2) - 2.0 * np.outer(perp, perp)
    shift = 2.0 * float(p0 @ perp) * perp
    walls = []
    for w in room.walls:
        normal = mirror @ w.normal
        walls.append(Wall(normal=normal, offset=w.offset + float(normal @ shift)))
    room_b = Room(walls=tuple(walls), dimension=2, labels=room.labels)

    echo_a = echo_matrix(room, traj, SimConfig())
    echo_b = echo_matrix(room_b, traj, SimConfig())
    deviation = float(np.max(np.abs(echo_a.entries - echo_b.entries)))
    return AmbiguousPair(
        room_a=room,
        traj_a=traj,
        room_b=room_b,
        traj_b=traj,
        echo=echo_a,
        family="collinear",
        family_parameter=math.atan2(u[1], u[0]),
        max_deviation=deviation,
    )


def _alignment_error(room_a, traj_a, room_b, traj_b, rot, perm):
    """Max-abs mismatch of trajectories, normals, and offsets under one motion."""
    pts_a = traj_a.points @ rot.T
    t = (traj_b.points - pts_a).mean(axis=0)
    e_traj = float(np.max(np.linalg.norm(pts_a + t[None, :] - traj_b.points, axis=1)))
    normals_a = room_a.normal_matrix() @ rot.T
    normals_b = room_b.normal_matrix()[perm]
    e_norm = float(np.max(np.linalg.norm(normals_a - normals_b, axis=1)))
    offs_a = room_a.offsets() + normals_a @ t
    offs_b = room_b.offsets()[perm]
    e_off = float(np.max(np.abs(offs_a - offs_b)))
    return max(e_traj, e_norm, e_off), t


def _rotation_candidates(room_a, room_b, reflect: bool):
    """Rotation guesses from wall-normal correspondences.

    Label-wise matching comes first; matching wall 0 of one room to each wall
    of the other covers relabelings that a symmetry of the wall set induces.
    """
    ang_a = normal_angles(room_a)
    ang_b = normal_angles(room_b)
    base = np.diag([1.0, -1.0]) if reflect else np.eye(2)
    src = ang_a if not reflect else -ang_a
    deltas = []
    deltas.append(float(np.angle(np.mean(np.exp(1j * (ang_b - src))))))
    for m in range(room_b.num_walls):
        deltas.append(float(ang_b[m] - src[0]))
    cands = []
    for delta in deltas:
        c, s = math.cos(delta), math.sin(delta)
        cands.append(np.array([[c, -s], [s, c]]) @ base)
    return cands


def _label_permutation(room_a, room_b, rot):
    """Greedy wall matching by rotated normals and offsets; None if not a bijection."""
    normals_a = room_a.normal_matrix() @ rot.T
    normals_b = room_b.normal_matrix()
    k = room_a.num_walls
    perm = np.full(k, -1, dtype=int)
    used = set()
    for j in range(k):
        dists = np.linalg.norm(normals_b - normals_a[j][None, :], axis=1)
        order = np.argsort(dists)
        for cand in order:
            if int(cand) not in used:
                perm[j] = int(cand)
                used.add(int(cand))
                break
    if len(used) != k:
        return None
    return perm


def rigid_congruence(
    room_a: Room,
    traj_a: Trajectory,
    room_b: Room,
    traj_b: Trajectory,
    *,
    allow_reflection: bool = False,
    tol: float = CONGRUENCE_TOL,
) -> CongruenceResult:
    """Decide whether two configurations differ only by a rigid motion.

    Candidate rotations come from wall-normal correspondences (label-wise
    first, then the relabelings a symmetric wall set admits); the translation
    is the trajectory least-squares fit.  Trajectory points always match
    index-wise, since measurement order is observable.  By default only
    proper motions count: a mirrored configuration reproduces the same echo
    matrix yet is a genuinely different room, which is exactly what the
    ambiguity families demonstrate.
    """
    if room_a.num_walls != room_b.num_walls or traj_a.num_points != traj_b.num_points:
        raise LabelMismatch("wall or measurement counts differ")
    if room_a.labels != room_b.labels:
        raise LabelMismatch("wall labels differ")

    best_err = math.inf
    best = None
    reflections = (False, True) if allow_reflection else (False,)
    identity_perm = np.arange(room_a.num_walls)
    for reflect in reflections:
        for rot in _rotation_candidates(room_a, room_b, reflect):
            for perm in (identity_perm, _label_permutation(room_a, room_b, rot)):
                if perm is None:
                    continue
                err, t = _alignment_error(room_a, traj_a, room_b, traj_b, rot, perm)
                if err < best_err:
                    best_err = err
                    best = (rot, t)

    if best is not None and best_err < tol:
        rot, t = best
        motion = RigidMotion(rotation=rot, translation=t, allow_reflection=True)
        return CongruenceResult(congruent=True, motion=motion, max_error=best_err)
    return CongruenceResult(congruent=False, motion=None, max_error=best_err)
