"""Noisy joint recovery by globally-restarted stress minimization.

The cost is the collocated-sensing analogue of the stress function from
multidimensional scaling:

    sum_ij w_ij (d~_ij - q_j + <n_j, r_i>)^2     subject to ||n_j|| = 1,

minimized over wall offsets ``q``, wall normals ``n`` (parameterized by
angles, which removes the constraint exactly), and measurement points ``r``
in the fixed gauge.  For iid Gaussian noise the minimizer is the maximum
likelihood estimate.  The landscape is non-convex, so the solver runs many
seeded restarts of a monotone alternating scheme plus a Levenberg-Marquardt
polish and keeps the best local minimum.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels
from .errors import (
    AmbiguousConfiguration,
    InconsistentData,
    InfeasibleCount,
    UnsupportedDimension,
)
from .reconstruction import (
    GaugedUnknowns,
    Reconstruction,
    RestartRecord,
    SolverDiagnostics,
    canonical_orientation,
    feasibility,
    gauged_to_geometry,
    points_collinear,
)
from .sim import EchoMatrix

TIE_RTOL = 1e-9


@dataclass(frozen=True)
class StressProblem:
    """A noisy, fully observed echo matrix plus optional per-entry weights."""

    echo: EchoMatrix
    weights: np.ndarray | None = None
    dimension: int = 2

    def __post_init__(self):
        if self.dimension != 2:
            raise UnsupportedDimension("the stress solver targets 2-D rooms")
        self.echo.require_complete()
        w = self.weights
        if w is None:
            w = np.ones(self.echo.entries.shape)
        else:
            w = np.array(w, dtype=float)
            if w.shape != self.echo.entries.shape:
                raise ValueError("weights shape must match the echo matrix")
            if np.any(w < 0):
                raise ValueError("weights must be nonnegative")
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)


@dataclass(frozen=True)
class SolverOptions:
    """Restart and convergence controls for :func:`solve_stress`."""

    restarts: int = 50
    max_iters: int = 500
    grad_tol: float = 1e-10
    cost_tol: float = 1e-14
    rng_seed: int = 0
    warm_start: Reconstruction | None = None
    angle_grid: int = 64

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restarts must be at least 1")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")


@dataclass(frozen=True)
class BilinearForm:
    """Per-term quadratic data of the lifted formulation.

    Substituting ``u_ij = <n_j, r_i>`` and stacking ``u = (q_j, u_ij)`` turns
    each squared residual into a quadratic in ``u`` whose only nonconvexity
    is the bilinear coupling constraint.  ``term_value`` evaluates the
    combination of ``matrix``, ``linear``, and the constant ``d^2`` that
    equals the squared residual ``(d - q + u)^2`` exactly.
    """

    matrix: np.ndarray = field(default_factory=lambda: np.array([[1.0, -1.0], [-1.0, 1.0]]))
    linear: np.ndarray = field(default_factory=lambda: np.array([-1.0, 1.0]))

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        v = np.array(self.linear, dtype=float)
        m.flags.writeable = False
        v.flags.writeable = False
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "linear", v)

    def term_value(self, offset: float, coupling: float, distance: float) -> float:
        """Quadratic term value for one (measurement, wall) pair.

        ``offset`` is q_j, ``coupling`` is u_ij = <n_j, r_i>, ``distance`` is
        the measured d~_ij.  Equals ``(distance - offset + coupling)**2``.
        """
        u = np.array([offset, coupling])
        return float(u @ self.matrix @ u + 2.0 * distance * (self.linear @ u) + distance * distance)


def _check_problem(problem: StressProblem):
    n, k = problem.echo.entries.shape
    if not feasibility(2, k, n):
        raise InfeasibleCount(f"(d, K, N) = (2, {k}, {n}) fails the counting inequality")


def stress_cost(params: GaugedUnknowns, problem: StressProblem) -> float:
    """Weighted sum of squared distance residuals; zero iff the fit is exact."""
    res = problem.echo.entries - params.model_matrix()
    return float(np.sum(problem.weights * res * res))


def stress_gradient(params: GaugedUnknowns, problem: StressProblem) -> np.ndarray:
    """Exact gradient over the free coordinates.

    Packing order: ``theta_2..theta_K``, ``q_1..q_K``, ``x_2..x_N``,
    ``y_2..y_N`` (the gauge-fixed coordinates carry no gradient entries).
    """
    d = problem.echo.entries
    w = problem.weights
    s = np.sin(params.thetas)
    c = np.cos(params.thetas)
    rx = params.xs
    ry = params.ys
    f = d - params.offsets[None, :] + rx[:, None] * s[None, :] + ry[:, None] * c[None, :]
    wf = w * f
    tval = c[None, :] * rx[:, None] - s[None, :] * ry[:, None]
    g_theta = 2.0 * (wf * tval).sum(axis=0)[1:]
    g_q = -2.0 * wf.sum(axis=0)
    g_x = 2.0 * (wf @ s)[1:]
    g_y = 2.0 * (wf @ c)[1:]
    return np.concatenate([g_theta, g_q, g_x, g_y])


def restart_sampler(echo: EchoMatrix, rng: np.random.Generator) -> GaugedUnknowns:
    """Random gauge-respecting starting point, anchored to the data.

    Offsets start at the first measurement row (clamped nonnegative) and the
    second point coordinates at their gauge identities, so only the angles
    and first coordinates are genuinely random.  Draw order is fixed: first
    K-1 angles, then an (N-1, 2) block of point coordinates whose second
    column is immediately overwritten by the data-driven values.
    """
    d = echo.entries
    n, k = d.shape
    rho = float(np.nanmax(d))
    if not np.isfinite(rho) or rho <= 0:
        rho = 1.0
    thetas = np.zeros(k)
    thetas[1:] = rng.uniform(0.0, 2.0 * np.pi, size=k - 1)
    offsets = np.clip(d[0, :].copy(), 0.0, None)
    pts = rng.uniform(-rho, rho, size=(n - 1, 2))
    xs = np.zeros(n)
    ys = np.zeros(n)
    xs[1:] = pts[:, 0]
    ys[1:] = d[0, 0] - d[1:, 0]
    return GaugedUnknowns(thetas=thetas, offsets=offsets, xs=xs, ys=ys)


def _run_single(d: np.ndarray, w: np.ndarray, params: GaugedUnknowns, opts: SolverOptions):
    theta = params.thetas.copy()
    q = params.offsets.copy()
    rx = params.xs.copy()
    ry = params.ys.copy()
    cost, iters, converged, trace = _kernels.run_restart(
        d, w, theta, q, rx, ry,
        opts.max_iters, opts.cost_tol,
        opts.max_iters, opts.grad_tol,
        opts.angle_grid,
    )
    theta[0] = 0.0
    rx[0] = 0.0
    ry[0] = 0.0
    out = GaugedUnknowns(thetas=theta, offsets=q, xs=rx, ys=ry)
    return float(cost), int(iters), bool(converged), out, tuple(float(t) for t in trace)


def solve_stress(problem: StressProblem, opts: SolverOptions | None = None) -> Reconstruction:
    """Best-of-restarts minimization of the stress cost.

    Restart 0 is the warm start when one is supplied, otherwise a sample from
    :func:`restart_sampler`; every restart draws from its own seeded stream,
    so results are independent of evaluation order.  The returned geometry is
    gauge-normalized and oriented counterclockwise (mirror images of a
    configuration fit the data equally well; the wall-order convention picks
    one).  A ``NoConvergence`` situation is reported through
    ``diagnostics.converged`` rather than an exception, together with the
    best iterate found.
    """
    opts = opts or SolverOptions()
    _check_problem(problem)
    echo = problem.echo
    seeds = np.random.SeedSequence(opts.rng_seed).spawn(opts.restarts)
    d = np.array(echo.entries, dtype=float, order="C")
    w = np.array(problem.weights, dtype=float, order="C")

    records: list[RestartRecord] = []
    for idx in range(opts.restarts):
        if idx == 0 and opts.warm_start is not None:
            start = opts.warm_start.params()
        else:
            start = restart_sampler(echo, np.random.default_rng(seeds[idx]))
        cost, iters, converged, out, trace = _run_single(d, w, start, opts)
        records.append(
            RestartRecord(index=idx, cost=cost, iterations=iters, converged=converged, params=out, cost_trace=trace)
        )

    best = min(records, key=lambda r: (r.cost, r.index))
    tied = tuple(r.index for r in records if r.cost <= best.cost + TIE_RTOL * (1.0 + best.cost))

    params = canonical_orientation(best.params, echo.labels)
    room, traj = gauged_to_geometry(params, echo.labels)
    residuals = echo.entries - params.model_matrix()

    diagnostics = SolverDiagnostics(
        restart_costs=tuple(r.cost for r in records),
        chosen_restart=best.index,
        iterations=best.iterations,
        converged=best.converged,
        cost_trace=best.cost_trace,
        tied_restarts=tied,
        collinear_warning=points_collinear(params.points()),
        used_warm_start=opts.warm_start is not None,
        backend=_kernels.backend_name(),
        method="stress",
        restarts=tuple(records),
    )
    return Reconstruction(room=room, trajectory=traj, cost=best.cost, residuals=residuals, diagnostics=diagnostics)


def suspected_ambiguity(rec: Reconstruction, tol: float = 1e-6) -> bool:
    """Heuristic ambiguity signal on a stress solution.

    True when the best iterate looks collinear, or when some cost-tied
    restart settled on a geometry that is not rigidly congruent to the chosen
    one (the signature of a parallelogram-type solution family).
    """
    from .ambiguity import rigid_congruence

    diag = rec.diagnostics
    if diag.collinear_warning:
        return True
    if not diag.restarts:
        return False
    labels = rec.room.labels
    for idx in diag.tied_restarts:
        if idx == diag.chosen_restart:
            continue
        params = canonical_orientation(diag.restarts[idx].params, labels)
        cand_room, cand_traj = gauged_to_geometry(params, labels)
        if not rigid_congruence(rec.room, rec.trajectory, cand_room, cand_traj, tol=tol).congruent:
            return True
    return False


def solve_auto(echo: EchoMatrix, opts: SolverOptions | None = None, noise_sigma: float = 0.0) -> Reconstruction:
    """Deterministic warm start when possible, stress minimization always.

    Runs the noiseless eliminator first; if it produces a usable estimate it
    seeds restart 0 of the stress solver, otherwise the stress solver runs on
    random restarts alone.  ``InfeasibleCount`` propagates (no solver can
    help); ambiguity or inconsistency in the eliminator only disables the
    warm start.
    """
    from .algebraic import solve_noiseless

    opts = opts or SolverOptions()
    warm = None
    note = "warm start from noiseless eliminator"
    try:
        warm = solve_noiseless(echo, noise_sigma=noise_sigma)
    except InfeasibleCount:
        raise
    except (AmbiguousConfiguration, InconsistentData) as exc:
        note = f"no warm start: {type(exc).__name__}"
    result = solve_stress(StressProblem(echo=echo), replace(opts, warm_start=warm))
    result.diagnostics.method = "auto"
    result.diagnostics.notes = result.diagnostics.notes + (note,)
    return result
