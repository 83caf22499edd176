"""Pure-Python reference implementation of the per-restart solver kernel.

The compiled extension in ``_native.pyx`` mirrors this module exactly; this
version is the import-time fallback and the behavioural reference for the
equivalence tests.  Semantics shared by both backends:

* parameters ``theta`` (K,), ``q`` (K,), ``rx`` (N,), ``ry`` (N,) are updated
  in place; ``theta[0]``, ``rx[0]``, ``ry[0]`` are gauge-fixed and never move;
* the cost is ``sum_ij W_ij (D_ij - q_j + sin(theta_j) rx_i + cos(theta_j) ry_i)^2``;
* phase 1 alternates an exact joint least-squares update of ``(q, r)`` with
  closed-form-plus-Newton updates of each angle, never increasing the cost;
* phase 2 is a Levenberg-Marquardt polish of all free coordinates that stops
  once the max-abs gradient entry drops below ``grad_tol``.
"""

from __future__ import annotations

import math

import numpy as np

BACKEND_NAME = "python"


def _cost(D, W, theta, q, rx, ry):
    s = np.sin(theta)
    c = np.cos(theta)
    f = D - q[None, :] + rx[:, None] * s[None, :] + ry[:, None] * c[None, :]
    return float(np.sum(W * f * f))


def _solve_linear_block(D, W, theta, q, rx, ry):
    """Exact least squares in (q, r) for fixed angles, via a Schur complement.

    Eliminating each free point r_i (a 2x2 solve) leaves a K x K system in q.
    The update is applied only if it does not increase the cost, which guards
    against the rare ill-conditioned normal matrix.
    """
    n_pts, k = D.shape
    s = np.sin(theta)
    c = np.cos(theta)
    normals = np.stack([s, c], axis=1)

    colw = W.sum(axis=0)
    lhs = np.diag(colw.copy())
    rhs = (W * np.where(np.isfinite(D), D, 0.0)).sum(axis=0)

    ginves = np.zeros((n_pts, 2, 2))
    for i in range(1, n_pts):
        w = W[i]
        g11 = float(np.sum(w * s * s))
        g12 = float(np.sum(w * s * c))
        g22 = float(np.sum(w * c * c))
        det = g11 * g22 - g12 * g12
        tr = g11 + g22
        if det <= 1e-12 * max(tr * tr, 1e-300):
            reg = 1e-9 * max(tr, 1e-12)
            g11 += reg
            g22 += reg
            det = g11 * g22 - g12 * g12
        ginv = np.array([[g22, -g12], [-g12, g11]]) / det
        ginves[i] = ginv
        m = normals @ ginv @ normals.T
        lhs -= np.outer(w, w) * m
        rhs -= w * (m @ (w * D[i]))

    try:
        q_new = np.linalg.solve(lhs, rhs)
    except np.linalg.LinAlgError:
        q_new = np.linalg.lstsq(lhs, rhs, rcond=None)[0]

    rx_new = rx.copy()
    ry_new = ry.copy()
    for i in range(1, n_pts):
        h = normals.T @ (W[i] * (q_new - D[i]))
        r = ginves[i] @ h
        rx_new[i] = r[0]
        ry_new[i] = r[1]

    before = _cost(D, W, theta, q, rx, ry)
    after = _cost(D, W, theta, q_new, rx_new, ry_new)
    if after <= before:
        q[:] = q_new
        rx[:] = rx_new
        ry[:] = ry_new


def _angle_objective(t, a11, a12, a22, b1, b2):
    s = math.sin(t)
    c = math.cos(t)
    return a11 * s * s + 2.0 * a12 * s * c + a22 * c * c + 2.0 * (b1 * s + b2 * c)


def _update_angles(D, W, theta, q, rx, ry, grid_size):
    """Per-wall 1-D minimization over the normal angle, walls decoupled.

    Each subproblem is a quadratic on the unit circle; a coarse grid pick
    (which always includes the current angle, so the step is monotone)
    followed by a guarded Newton polish is exact to machine precision.
    """
    n_pts, k = D.shape
    for j in range(1, k):
        w = W[:, j]
        beta = D[:, j] - q[j]
        a11 = float(np.sum(w * rx * rx))
        a12 = float(np.sum(w * rx * ry))
        a22 = float(np.sum(w * ry * ry))
        b1 = float(np.sum(w * beta * rx))
        b2 = float(np.sum(w * beta * ry))

        best_t = theta[j]
        best_val = _angle_objective(best_t, a11, a12, a22, b1, b2)
        for m in range(grid_size):
            t = 2.0 * math.pi * m / grid_size
            val = _angle_objective(t, a11, a12, a22, b1, b2)
            if val < best_val:
                best_val = val
                best_t = t

        t = best_t
        for _ in range(12):
            s = math.sin(t)
            c = math.cos(t)
            s2 = 2.0 * s * c
            c2 = c * c - s * s
            d1 = (a11 - a22) * s2 + 2.0 * a12 * c2 + 2.0 * (b1 * c - b2 * s)
            d2 = 2.0 * (a11 - a22) * c2 - 4.0 * a12 * s2 - 2.0 * (b1 * s + b2 * c)
            if d2 <= 0 or not math.isfinite(d1):
                break
            step = d1 / d2
            t_new = t - step
            val = _angle_objective(t_new, a11, a12, a22, b1, b2)
            if val <= best_val:
                best_val = val
                best_t = t_new
                t = t_new
            else:
                break
            if abs(step) < 1e-15:
                break
        theta[j] = best_t


def _lm_polish(D, W, theta, q, rx, ry, max_iters, grad_tol, trace):
    """Levenberg-Marquardt on all free coordinates (quasi-second-order polish)."""
    n_pts, k = D.shape
    m = (k - 1) + k + 2 * (n_pts - 1)
    sl_theta = slice(0, k - 1)
    sl_q = slice(k - 1, 2 * k - 1)
    sl_rx = slice(2 * k - 1, 2 * k - 1 + (n_pts - 1))
    sl_ry = slice(2 * k - 1 + (n_pts - 1), m)

    lam = 1e-3
    cost = _cost(D, W, theta, q, rx, ry)
    converged = False
    iters = 0

    for iters in range(1, max_iters + 1):
        s = np.sin(theta)
        c = np.cos(theta)
        f = D - q[None, :] + rx[:, None] * s[None, :] + ry[:, None] * c[None, :]
        wf = W * f
        tval = c[None, :] * rx[:, None] - s[None, :] * ry[:, None]

        b = np.zeros(m)
        b[sl_theta] = (wf * tval).sum(axis=0)[1:]
        b[sl_q] = -wf.sum(axis=0)
        b[sl_rx] = (wf @ s)[1:]
        b[sl_ry] = (wf @ c)[1:]

        gmax = float(np.max(np.abs(2.0 * b)))
        if gmax < grad_tol:
            converged = True
            break

        h = np.zeros((m, m))
        wt = W * tval
        h[sl_theta, sl_theta] = np.diag((wt * tval).sum(axis=0)[1:])
        block_tq = np.diag(-wt.sum(axis=0))[1:, :]
        h[sl_theta, sl_q] = block_tq
        h[sl_q, sl_theta] = block_tq.T
        block_trx = (wt * s[None, :]).T[1:, 1:]
        block_try = (wt * c[None, :]).T[1:, 1:]
        h[sl_theta, sl_rx] = block_trx
        h[sl_rx, sl_theta] = block_trx.T
        h[sl_theta, sl_ry] = block_try
        h[sl_ry, sl_theta] = block_try.T
        h[sl_q, sl_q] = np.diag(W.sum(axis=0))
        block_qrx = (-(W * s[None, :]).T)[:, 1:]
        block_qry = (-(W * c[None, :]).T)[:, 1:]
        h[sl_q, sl_rx] = block_qrx
        h[sl_rx, sl_q] = block_qrx.T
        h[sl_q, sl_ry] = block_qry
        h[sl_ry, sl_q] = block_qry.T
        h[sl_rx, sl_rx] = np.diag((W @ (s * s))[1:])
        block_xy = np.diag((W @ (s * c))[1:])
        h[sl_rx, sl_ry] = block_xy
        h[sl_ry, sl_rx] = block_xy
        h[sl_ry, sl_ry] = np.diag((W @ (c * c))[1:])

        diag = np.diag(h).copy()
        diag[diag <= 0] = 1.0
        accepted = False
        for _ in range(16):
            try:
                delta = np.linalg.solve(h + lam * np.diag(diag), -b)
            except np.linalg.LinAlgError:
                lam *= 4.0
                continue
            theta_t = theta.copy()
            q_t = q.copy()
            rx_t = rx.copy()
            ry_t = ry.copy()
            theta_t[1:] += delta[sl_theta]
            q_t += delta[sl_q]
            rx_t[1:] += delta[sl_rx]
            ry_t[1:] += delta[sl_ry]
            trial = _cost(D, W, theta_t, q_t, rx_t, ry_t)
            if trial < cost:
                theta[:] = theta_t
                q[:] = q_t
                rx[:] = rx_t
                ry[:] = ry_t
                cost = trial
                lam = max(lam / 3.0, 1e-14)
                accepted = True
                break
            lam *= 4.0
            if lam > 1e15:
                break
        trace.append(cost)
        if not accepted:
            # A Gauss-Newton step improves the cost by about g^2 / (4 h); once
            # that falls below the float resolution of the cost no step can be
            # accepted, so a gradient at that floor counts as converged.
            floor = 4.0 * math.sqrt(np.max(np.diag(h)) * 2.220446049250313e-16 * max(cost, 0.0))
            if gmax <= max(grad_tol, floor):
                converged = True
            break

    return cost, iters, converged


def run_restart(
    D,
    W,
    theta,
    q,
    rx,
    ry,
    max_alt_iters: int,
    cost_tol: float,
    max_polish_iters: int,
    grad_tol: float,
    grid_size: int = 64,
):
    """Optimize one start to a local minimum; see the module docstring.

    Returns ``(cost, iterations, converged, trace)`` where ``trace`` is the
    cost after every alternating sweep and accepted polish step.
    """
    D = np.ascontiguousarray(D, dtype=float)
    W = np.ascontiguousarray(W, dtype=float)
    trace = []
    cost = _cost(D, W, theta, q, rx, ry)
    trace.append(cost)

    alt_iters = 0
    for alt_iters in range(1, max_alt_iters + 1):
        _solve_linear_block(D, W, theta, q, rx, ry)
        _update_angles(D, W, theta, q, rx, ry, grid_size)
        new_cost = _cost(D, W, theta, q, rx, ry)
        trace.append(new_cost)
        decrease = cost - new_cost
        cost = new_cost
        if decrease < cost_tol:
            break

    cost, lm_iters, converged = _lm_polish(D, W, theta, q, rx, ry, max_polish_iters, grad_tol, trace)
    return cost, alt_iters + lm_iters, converged, np.array(trace)
