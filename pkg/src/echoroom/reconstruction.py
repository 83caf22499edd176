"""Shared solver types: gauge-fixed parameter vectors and reconstruction results.

Both solvers work in a fixed gauge: the first measurement point is pinned to
the origin and the first wall normal to (0, 1).  Wall normals are
parameterized by an angle ``theta`` with ``n = (sin theta, cos theta)`` so the
unit-norm constraint is satisfied by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import Room, Trajectory, Wall, wall_winding


def feasibility(dimension: int, num_walls: int, num_points: int) -> bool:
    """Counting test: do K*N distances suffice for d*K + d*N unknowns minus gauge?

    True iff ``K N >= d K + d N - d (d + 1) / 2``.
    """
    d, k, n = dimension, num_walls, num_points
    if d not in (2, 3):
        raise ValueError("dimension must be 2 or 3")
    if k < d + 1 or n < 1:
        return False
    return k * n >= d * k + d * n - d * (d + 1) // 2


@dataclass
class GaugedUnknowns:
    """Gauge-fixed unknowns of a 2-D configuration.

    ``thetas[0]`` and ``xs[0]`` are always zero; ``ys`` holds the second
    coordinates of the measurement points (``ys[0] = 0``).
    """

    thetas: np.ndarray
    offsets: np.ndarray
    xs: np.ndarray
    ys: np.ndarray

    def __post_init__(self):
        self.thetas = np.array(self.thetas, dtype=float)
        self.offsets = np.array(self.offsets, dtype=float)
        self.xs = np.array(self.xs, dtype=float)
        self.ys = np.array(self.ys, dtype=float)
        if self.thetas.shape != self.offsets.shape or self.thetas.ndim != 1:
            raise ValueError("thetas and offsets must be 1-D arrays of equal length")
        if self.xs.shape != self.ys.shape or self.xs.ndim != 1:
            raise ValueError("xs and ys must be 1-D arrays of equal length")
        if abs(self.thetas[0]) > 1e-12 or abs(self.xs[0]) > 1e-12:
            raise ValueError("gauge requires thetas[0] = 0 and xs[0] = 0")
        self.thetas[0] = 0.0
        self.xs[0] = 0.0

    @property
    def num_walls(self) -> int:
        return self.thetas.shape[0]

    @property
    def num_points(self) -> int:
        return self.xs.shape[0]

    def normals(self) -> np.ndarray:
        """Unit wall normals (K, 2) with rows ``(sin theta, cos theta)``."""
        return np.stack([np.sin(self.thetas), np.cos(self.thetas)], axis=1)

    def points(self) -> np.ndarray:
        """Measurement points (N, 2)."""
        return np.stack([self.xs, self.ys], axis=1)

    def model_matrix(self) -> np.ndarray:
        """Model distances ``q_j - <n_j, r_i>`` implied by the parameters."""
        return self.offsets[None, :] - self.points() @ self.normals().T

    def copy(self) -> "GaugedUnknowns":
        return GaugedUnknowns(self.thetas.copy(), self.offsets.copy(), self.xs.copy(), self.ys.copy())

    def mirrored(self) -> "GaugedUnknowns":
        """Reflection across the y-axis; preserves the gauge and every distance."""
        return GaugedUnknowns(-self.thetas, self.offsets.copy(), -self.xs, self.ys.copy())


def gauged_to_geometry(params: GaugedUnknowns, labels=None) -> tuple[Room, Trajectory]:
    normals = params.normals()
    walls = tuple(Wall(normal=normals[j], offset=float(params.offsets[j])) for j in range(params.num_walls))
    room = Room(walls=walls, dimension=2, labels=tuple(labels) if labels else ())
    return room, Trajectory(points=params.points())


def geometry_to_gauged(room: Room, trajectory: Trajectory) -> GaugedUnknowns:
    """Extract gauge-fixed parameters; the input must already be gauge-normalized."""
    normals = room.normal_matrix()
    thetas = np.arctan2(normals[:, 0], normals[:, 1])
    pts = trajectory.points
    return GaugedUnknowns(thetas=thetas, offsets=room.offsets(), xs=pts[:, 0].copy(), ys=pts[:, 1].copy())


def canonical_orientation(params: GaugedUnknowns, labels=None) -> GaugedUnknowns:
    """Resolve the mirror ambiguity by preferring counterclockwise wall order.

    A configuration and its reflection produce identical echo matrices in the
    same gauge; rooms built from vertex lists store walls counterclockwise, so
    solver output is mirrored when its wall sequence winds clockwise.
    """
    room, _ = gauged_to_geometry(params, labels)
    if wall_winding(room) == "cw":
        return params.mirrored()
    return params


@dataclass
class RestartRecord:
    """Outcome of a single solver restart."""

    index: int
    cost: float
    iterations: int
    converged: bool
    params: GaugedUnknowns
    cost_trace: tuple[float, ...] = ()


@dataclass
class SolverDiagnostics:
    """Bookkeeping attached to a reconstruction."""

    restart_costs: tuple[float, ...] = ()
    chosen_restart: int = 0
    iterations: int = 0
    converged: bool = True
    cost_trace: tuple[float, ...] = ()
    tied_restarts: tuple[int, ...] = ()
    collinear_warning: bool = False
    used_warm_start: bool = False
    backend: str = ""
    method: str = ""
    notes: tuple[str, ...] = ()
    restarts: tuple[RestartRecord, ...] = ()

    def to_json_dict(self) -> dict:
        return {
            "method": self.method,
            "backend": self.backend,
            "restart_costs": [float(c) for c in self.restart_costs],
            "chosen_restart": int(self.chosen_restart),
            "iterations": int(self.iterations),
            "converged": bool(self.converged),
            "tied_restarts": [int(i) for i in self.tied_restarts],
            "collinear_warning": bool(self.collinear_warning),
            "used_warm_start": bool(self.used_warm_start),
            "notes": list(self.notes),
        }


@dataclass
class Reconstruction:
    """Joint estimate: room, trajectory, achieved cost, and residuals."""

    room: Room
    trajectory: Trajectory
    cost: float
    residuals: np.ndarray
    diagnostics: SolverDiagnostics = field(default_factory=SolverDiagnostics)

    @property
    def max_abs_residual(self) -> float:
        return float(np.max(np.abs(self.residuals)))

    def params(self) -> GaugedUnknowns:
        return geometry_to_gauged(self.room, self.trajectory)


def points_collinear(points: np.ndarray, tol: float = 1e-9) -> bool:
    """True if every point lies within ``tol`` (times the spread) of one line."""
    pts = np.asarray(points, dtype=float)
    if pts.shape[0] <= 2:
        return True
    centered = pts - pts.mean(axis=0)
    s = np.linalg.svd(centered, compute_uv=False)
    scale = max(float(s[0]), 1.0)
    return float(s[-1]) <= tol * scale
