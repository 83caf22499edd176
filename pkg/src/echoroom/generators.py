"""Named room and trajectory generators for experiments and the CLI.

Generator strings:

* rooms: ``square`` | ``rect W H`` | ``parallelogram ALPHA BETA`` (degrees) |
  ``regular-K`` | ``random-convex K SEED``
* trajectories: ``random-interior N SEED`` | ``collinear N SEED``

Everything is deterministic in its seed arguments.
"""

from __future__ import annotations

import math

import numpy as np

from .geometry import Room, Trajectory, Wall, room_from_vertices, room_vertices


def square_room(side: float = 1.0) -> Room:
    return rect_room(side, side)


def rect_room(width: float, height: float) -> Room:
    if width <= 0 or height <= 0:
        raise ValueError("rectangle sides must be positive")
    return room_from_vertices([(0.0, 0.0), (width, 0.0), (width, height), (0.0, height)])


def parallelogram_room(alpha: float, beta: float, side: float = 1.0) -> Room:
    """Parallelogram with wall-normal directions at angles alpha and beta (radians).

    ``alpha = pi/2, beta = 0`` reproduces the axis-aligned square of the given
    side; other angle pairs shear it while keeping all wall offsets.
    """
    if abs(math.sin(alpha - beta)) < 1e-9:
        raise ValueError("alpha - beta must not be a multiple of pi")
    base = rect_room(side, side)
    u_alpha = np.array([math.cos(alpha), math.sin(alpha)])
    u_beta = np.array([math.cos(beta), math.sin(beta)])
    walls = []
    for w in base.walls:
        nx, ny = w.normal
        if abs(ny) > 0.5:
            normal = math.copysign(1.0, ny) * u_alpha
        else:
            normal = math.copysign(1.0, nx) * u_beta
        walls.append(Wall(normal=normal, offset=w.offset))
    return Room(walls=tuple(walls), dimension=2, labels=base.labels)


def regular_room(num_walls: int, circumradius: float = 1.0) -> Room:
    if num_walls < 3:
        raise ValueError("need at least three walls")
    angles = [2.0 * math.pi * k / num_walls for k in range(num_walls)]
    verts = [(circumradius * math.cos(a), circumradius * math.sin(a)) for a in angles]
    return room_from_vertices(verts)


def random_convex_room(
    num_walls: int,
    seed: int,
    *,
    min_gap_deg: float = 12.0,
    offset_range: tuple[float, float] = (0.45, 1.1),
) -> Room:
    """Random bounded convex room where every wall is a face.

    Normal directions are drawn with a minimum angular separation (which also
    keeps the noiseless solver well conditioned) and offsets uniformly from
    ``offset_range``; candidates where some wall is redundant are rejected
    and redrawn.
    """
    rng = np.random.default_rng(seed)
    min_gap = math.radians(min_gap_deg)
    for _ in range(1000):
        raw = np.sort(rng.uniform(0.0, 2.0 * math.pi, size=num_walls))
        gaps = np.diff(np.concatenate([raw, [raw[0] + 2.0 * math.pi]]))
        if gaps.min() < min_gap or gaps.max() > math.pi - min_gap:
            continue
        offsets = rng.uniform(*offset_range, size=num_walls)
        walls = tuple(
            Wall(normal=np.array([math.cos(a), math.sin(a)]), offset=float(q))
            for a, q in zip(raw, offsets)
        )
        # Normal angles increase: wall order is counterclockwise by construction.
        room = Room(walls=walls, dimension=2)
        try:
            room_vertices(room, strict=True)
        except Exception:
            continue
        return room
    raise RuntimeError("failed to draw a valid random convex room")


def random_interior_trajectory(room: Room, num_points: int, seed, *, margin: float = 0.02) -> Trajectory:
    """Uniform rejection sample of points strictly inside the room."""
    rng = np.random.default_rng(seed)
    verts = room_vertices(room, strict=False)
    lo = verts.min(axis=0)
    hi = verts.max(axis=0)
    pts = []
    guard = 0
    while len(pts) < num_points:
        guard += 1
        if guard > 100000:
            raise RuntimeError("rejection sampling failed; is the room degenerate?")
        p = rng.uniform(lo, hi)
        if room.contains(p, tol=margin):
            pts.append(p)
    return Trajectory(points=np.array(pts))


def collinear_trajectory(room: Room, num_points: int, seed, *, margin: float = 0.05):
    """Points on a random interior line segment; returns (trajectory, point, direction).

    The supporting line data is returned so reflection families can be built
    on top of the same trajectory.
    """
    rng = np.random.default_rng(seed)
    for _ in range(1000):
        anchor_traj = random_interior_trajectory(room, 1, rng, margin=0.15)
        anchor = anchor_traj.points[0]
        angle = rng.uniform(0.0, math.pi)
        direction = np.array([math.cos(angle), math.sin(angle)])
        # Find the interior chord through the anchor along the direction.
        t_lo, t_hi = -np.inf, np.inf
        for w in room.walls:
            denom = float(w.normal @ direction)
            slack = w.signed_distance(anchor) - margin
            if abs(denom) < 1e-12:
                if slack <= 0:
                    t_lo, t_hi = 1.0, -1.0
                    break
                continue
            bound = slack / denom
            if denom > 0:
                t_hi = min(t_hi, bound)
            else:
                t_lo = max(t_lo, -bound)
        if not (t_lo < t_hi) or not np.isfinite(t_lo) or not np.isfinite(t_hi):
            continue
        span = t_hi - t_lo
        offsets = np.sort(rng.uniform(t_lo + 0.1 * span, t_hi - 0.1 * span, size=num_points))
        pts = anchor[None, :] + offsets[:, None] * direction[None, :]
        if all(room.contains(p, tol=margin / 2) for p in pts):
            return Trajectory(points=pts), anchor, direction, offsets
    raise RuntimeError("failed to place a collinear trajectory")


def _split_spec(spec: str) -> list[str]:
    return spec.replace(",", " ").split()


def room_from_spec(spec: str) -> Room:
    """Parse a room generator string (see module docstring); angles in degrees."""
    parts = _split_spec(spec)
    if not parts:
        raise ValueError("empty room spec")
    name = parts[0].lower()
    if name == "square":
        side = float(parts[1]) if len(parts) > 1 else 1.0
        return square_room(side)
    if name == "rect":
        if len(parts) != 3:
            raise ValueError("usage: rect W H")
        return rect_room(float(parts[1]), float(parts[2]))
    if name == "parallelogram":
        if len(parts) != 3:
            raise ValueError("usage: parallelogram ALPHA_DEG BETA_DEG")
        return parallelogram_room(math.radians(float(parts[1])), math.radians(float(parts[2])))
    if name.startswith("regular-"):
        return regular_room(int(name.split("-", 1)[1]))
    if name == "random-convex":
        if len(parts) != 3:
            raise ValueError("usage: random-convex K SEED")
        return random_convex_room(int(parts[1]), int(parts[2]))
    raise ValueError(f"unknown room generator: {spec!r}")


def trajectory_from_spec(spec: str, room: Room, seed_override=None) -> Trajectory:
    """Parse a trajectory generator string; the seed argument may be omitted
    when ``seed_override`` is supplied (per-trial seeding in sweeps)."""
    parts = _split_spec(spec)
    if not parts:
        raise ValueError("empty trajectory spec")
    name = parts[0].lower()
    if name not in ("random-interior", "collinear"):
        raise ValueError(f"unknown trajectory generator: {spec!r}")
    if len(parts) < 2:
        raise ValueError(f"usage: {name} N [SEED]")
    num_points = int(parts[1])
    if seed_override is not None:
        seed = seed_override
    elif len(parts) > 2:
        seed = int(parts[2])
    else:
        raise ValueError(f"{name} needs a seed (or a per-trial override)")
    if name == "random-interior":
        return random_interior_trajectory(room, num_points, seed)
    traj, _, _, _ = collinear_trajectory(room, num_points, seed)
    return traj
