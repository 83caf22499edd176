"""Gauge-invariant error metrics between true and reconstructed configurations.

The aligning motion minimizes the summed squared trajectory error (points are
the direct unknowns; vertices are derived), then both the RMS vertex error
over label-matched vertices and the RMS location error are evaluated under
that single motion.  Aligning first means the numbers never punish the
arbitrary gauge choice of either configuration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import LabelMismatch
from .geometry import RigidMotion, Room, Trajectory, room_vertices


@dataclass(frozen=True)
class ErrorReport:
    """RMS errors after optimal rigid alignment, plus the motion used."""

    vertex_error: float
    location_error: float
    aligning_motion: RigidMotion
    per_vertex: tuple[float, ...]
    per_location: tuple[float, ...]

    @property
    def vertex_error_sum(self) -> float:
        """Summed (not RMS) vertex distances, for cross-tool comparison."""
        return float(sum(self.per_vertex))

    @property
    def location_error_sum(self) -> float:
        return float(sum(self.per_location))

    def to_json_dict(self) -> dict:
        return {
            "vertex_error": self.vertex_error,
            "location_error": self.location_error,
            "vertex_error_sum": self.vertex_error_sum,
            "location_error_sum": self.location_error_sum,
            "per_vertex": list(self.per_vertex),
            "per_location": list(self.per_location),
            "aligning_motion": {
                "rotation": [[float(v) for v in row] for row in self.aligning_motion.rotation],
                "translation": [float(v) for v in self.aligning_motion.translation],
                "reflection": bool(self.aligning_motion.is_reflection),
            },
        }


def _kabsch(source: np.ndarray, target: np.ndarray, allow_reflection: bool) -> np.ndarray:
    """Rotation (optionally improper) minimizing ||R source - target||^2 about centroids."""
    h = source.T @ target
    u, _, vt = np.linalg.svd(h)
    if allow_reflection:
        return vt.T @ u.T
    sign = float(np.sign(np.linalg.det(vt.T @ u.T)))
    return vt.T @ np.diag([1.0, sign]) @ u.T


def align_and_score(
    truth: tuple[Room, Trajectory],
    estimate: tuple[Room, Trajectory],
    *,
    allow_reflection: bool = False,
    align: bool = True,
) -> ErrorReport:
    """Score an estimate against the truth after optimal rigid alignment.

    The motion maps the estimate onto the truth.  ``align=False`` skips the
    alignment (identity motion), which compares in the shared fixed gauge
    instead.  ``allow_reflection`` admits improper motions; keep it off
    except when studying reflection ambiguities deliberately.

    Raises
    ------
    LabelMismatch
        If wall counts, point counts, or wall labels differ.
    """
    room_t, traj_t = truth
    room_e, traj_e = estimate
    if room_t.num_walls != room_e.num_walls or traj_t.num_points != traj_e.num_points:
        raise LabelMismatch("wall or measurement counts differ")
    if room_t.labels != room_e.labels:
        raise LabelMismatch("wall labels differ")

    pts_t = traj_t.points
    pts_e = traj_e.points
    verts_t = room_vertices(room_t, strict=False)
    verts_e_raw = room_vertices(room_e, strict=False)

    if align:
        cen_t = pts_t.mean(axis=0)
        cen_e = pts_e.mean(axis=0)
        src = pts_e - cen_e
        dst = pts_t - cen_t
        rotations = [np.eye(2), _kabsch(src, dst, False)]
        # Degenerate trajectories (single point, collinear points) leave the
        # rotation partly free; wall normals rotate rigidly and pin it.
        rotations.append(_kabsch(room_e.normal_matrix(), room_t.normal_matrix(), False))
        if allow_reflection:
            rotations.append(_kabsch(src, dst, True))
            rotations.append(_kabsch(room_e.normal_matrix(), room_t.normal_matrix(), True))
        candidates = []
        for rot in rotations:
            trans = cen_t - rot @ cen_e
            candidates.append(RigidMotion(rotation=rot, translation=trans, allow_reflection=True))
        # Primary key: trajectory misfit.  Vertex misfit breaks ties, so that
        # among equally good alignments the room comparison stays meaningful.
        scored = []
        for cand in candidates:
            t_sq = float(np.sum((cand.apply(pts_e) - pts_t) ** 2))
            v_sq = float(np.sum((cand.apply(verts_e_raw) - verts_t) ** 2))
            scored.append((t_sq, v_sq, cand))
        t_best = min(s[0] for s in scored)
        tie = 1e-12 * max(1.0, float(np.sum(dst**2)))
        motion = min((s for s in scored if s[0] <= t_best + tie), key=lambda s: s[1])[2]
    else:
        motion = RigidMotion.identity(2)

    moved_pts = motion.apply(pts_e)
    per_location = np.linalg.norm(moved_pts - pts_t, axis=1)
    verts_e = motion.apply(verts_e_raw)
    per_vertex = np.linalg.norm(verts_e - verts_t, axis=1)

    return ErrorReport(
        vertex_error=float(math.sqrt(np.mean(per_vertex**2))),
        location_error=float(math.sqrt(np.mean(per_location**2))),
        aligning_motion=motion,
        per_vertex=tuple(float(v) for v in per_vertex),
        per_location=tuple(float(v) for v in per_location),
    )
