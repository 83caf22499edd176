"""Deterministic recovery from noiseless (or near-noiseless) echo matrices.

In the fixed gauge the distance model linearizes against the first row and
first column of the echo matrix: with ``a_i = d_11 - d_i1`` (the second point
coordinates) and ``b_ij = d_1j - d_ij``, every remaining measurement reads

    x_i sin(theta_j) + a_i cos(theta_j) = b_ij,        i >= 2, j >= 2,

i.e. the (N-1) x (K-1) matrix ``B`` factors as ``x s^T + a c^T`` with known
``a`` and unknown unit pairs ``(s_j, c_j)``.  The solver recovers the
two-dimensional column space of ``B``, expresses each column in a basis
``(r_hat, a)``, and turns the unit-norm constraints into a small linear
system whose rank deficiency is exactly the non-uniqueness of the
configuration: a parallelogram room or collinear measurement points.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import AmbiguousConfiguration, InconsistentData, InfeasibleCount
from .reconstruction import (
    GaugedUnknowns,
    Reconstruction,
    SolverDiagnostics,
    canonical_orientation,
    feasibility,
    gauged_to_geometry,
)
from .sim import EchoMatrix

DEGENERACY_TOL = 1e-8


def solve_noiseless(echo: EchoMatrix, *, tol: float = 1e-9, noise_sigma: float = 0.0) -> Reconstruction:
    """Recover room and trajectory from a complete echo matrix in one pass.

    The output is gauge-normalized (first point at the origin, first normal
    (0, 1)) and oriented counterclockwise; a configuration and its mirror fit
    any echo matrix equally well, and the wall-order convention selects one.

    On noiseless input the reconstruction reproduces the data to ``tol``;
    with ``noise_sigma > 0`` the acceptance threshold relaxes to
    ``10 * sigma * sqrt(N K)`` and the algebraic estimate is suitable as a
    warm start for the stress solver.

    Raises
    ------
    InfeasibleCount
        If ``(2, K, N)`` fails the counting inequality.
    AmbiguousConfiguration
        If the data itself admits residual-equal, non-congruent solutions:
        collinear measurement points or a parallelogram room.
    InconsistentData
        If no parameters reproduce the data within the threshold (noise too
        large for the deterministic path, or corrupt input).
    """
    echo.require_complete()
    d = echo.entries
    n, k = d.shape
    if not feasibility(2, k, n):
        raise InfeasibleCount(f"(d, K, N) = (2, {k}, {n}) fails the counting inequality")

    scale = max(1.0, float(np.max(np.abs(d))))
    a = d[0, 0] - d[1:, 0]
    b = d[0, 1:][None, :] - d[1:, 1:]

    a_norm = float(np.linalg.norm(a))
    if a_norm <= DEGENERACY_TOL * scale:
        raise AmbiguousConfiguration(
            "measurement points are collinear (all second coordinates coincide in the gauge frame)"
        )
    a_hat = a / a_norm

    b_perp = b - np.outer(a_hat, a_hat @ b)
    svals_perp = np.linalg.svd(b_perp, compute_uv=False)
    if svals_perp[0] <= DEGENERACY_TOL * scale:
        raise AmbiguousConfiguration("measurement points are collinear")
    u, _, _ = np.linalg.svd(b_perp, full_matrices=False)
    r_hat = u[:, 0]

    sigma = r_hat @ b
    gamma = (a @ b) / (a_norm * a_norm)

    # Unit-norm constraints: sigma_j^2 * X - 2 gamma_j sigma_j * Y = 1 - gamma_j^2
    # with X = p^2 + Y^2; linear in (X, Y).
    coeffs = np.stack([sigma * sigma, -2.0 * gamma * sigma], axis=1)
    rhs = 1.0 - gamma * gamma
    svals_sys = np.linalg.svd(coeffs, compute_uv=False)
    if svals_sys[-1] <= DEGENERACY_TOL * max(svals_sys[0], 1e-300):
        raise AmbiguousConfiguration(
            "unit-norm system is rank deficient: parallelogram room (or walls parallel to the reference wall)"
        )
    xy, *_ = np.linalg.lstsq(coeffs, rhs, rcond=None)
    x_val, y_val = float(xy[0]), float(xy[1])
    p_sq = x_val - y_val * y_val
    if p_sq <= 0:
        raise InconsistentData("unit-norm system has no real solution; data is too noisy or corrupt")
    p = math.sqrt(p_sq)

    sines = np.concatenate([[0.0], sigma * p])
    cosines = np.concatenate([[1.0], gamma - sigma * y_val])
    norms = np.hypot(sines, cosines)
    if np.any(norms <= 0):
        raise InconsistentData("degenerate recovered normal")
    thetas = np.arctan2(sines / norms, cosines / norms)

    xs = np.concatenate([[0.0], (r_hat / p) + a * (y_val / p)])
    ys = np.concatenate([[0.0], a])
    offsets = d[0, :].copy()

    params = canonical_orientation(
        GaugedUnknowns(thetas=thetas, offsets=offsets, xs=xs, ys=ys), echo.labels
    )

    residuals = d - params.model_matrix()
    max_abs = float(np.max(np.abs(residuals)))
    threshold = max(tol, 10.0 * noise_sigma * math.sqrt(n * k))
    if max_abs > threshold:
        raise InconsistentData(
            f"max-abs echo residual {max_abs:.3e} exceeds the acceptance threshold {threshold:.3e}"
        )

    room, traj = gauged_to_geometry(params, echo.labels)
    cost = float(np.sum(residuals * residuals))
    diagnostics = SolverDiagnostics(
        restart_costs=(cost,),
        chosen_restart=0,
        iterations=1,
        converged=True,
        method="algebraic",
        backend="numpy",
        notes=(f"acceptance threshold {threshold:.3e}",),
    )
    return Reconstruction(room=room, trajectory=traj, cost=cost, residuals=residuals, diagnostics=diagnostics)
