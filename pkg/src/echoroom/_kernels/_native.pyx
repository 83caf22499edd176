# cython: language_level=3
"""Compiled per-restart solver kernel.

Mirrors ``py_backend.py`` operation for operation; see that module for the
shared semantics.  All linear algebra is hand-rolled on small dense systems
(K walls, N points, so at most a few dozen unknowns), which keeps the hot
loop free of Python calls and BLAS dispatch overhead.
"""

import numpy as np

from libc.math cimport sin, cos, fabs, sqrt, isfinite, M_PI
from libc.stdlib cimport malloc, free
from libc.string cimport memset, memcpy

BACKEND_NAME = "native"


cdef inline double _dmax(double a, double b) noexcept nogil:
    return a if a > b else b


cdef int _chol_solve(double* a, double* rhs, double* x, int n) noexcept nogil:
    """Solve a symmetric positive definite system in place; 0 on success."""
    cdef int i, j, k
    cdef double acc
    for j in range(n):
        acc = a[j * n + j]
        for k in range(j):
            acc -= a[j * n + k] * a[j * n + k]
        if acc <= 0.0 or not isfinite(acc):
            return -1
        a[j * n + j] = sqrt(acc)
        for i in range(j + 1, n):
            acc = a[i * n + j]
            for k in range(j):
                acc -= a[i * n + k] * a[j * n + k]
            a[i * n + j] = acc / a[j * n + j]
    for i in range(n):
        acc = rhs[i]
        for k in range(i):
            acc -= a[i * n + k] * x[k]
        x[i] = acc / a[i * n + i]
    for i in range(n - 1, -1, -1):
        acc = x[i]
        for k in range(i + 1, n):
            acc -= a[k * n + i] * x[k]
        x[i] = acc / a[i * n + i]
    return 0


cdef double _cost_raw(double* D, double* W, double* s, double* c,
                      double* q, double* rx, double* ry, int N, int K) noexcept nogil:
    cdef int i, j
    cdef double acc = 0.0, f
    for i in range(N):
        for j in range(K):
            f = D[i * K + j] - q[j] + rx[i] * s[j] + ry[i] * c[j]
            acc += W[i * K + j] * f * f
    return acc


cdef void _trig(double* theta, double* s, double* c, int K) noexcept nogil:
    cdef int j
    for j in range(K):
        s[j] = sin(theta[j])
        c[j] = cos(theta[j])


cdef void _solve_linear_block(double* D, double* W, double* theta,
                              double* q, double* rx, double* ry,
                              int N, int K, double* scratch) noexcept nogil:
    """Exact least squares in (q, r) for fixed angles via a Schur complement."""
    cdef double* s = scratch
    cdef double* c = s + K
    cdef double* lhs = c + K
    cdef double* rhs = lhs + K * K
    cdef double* qn = rhs + K
    cdef double* rxn = qn + K
    cdef double* ryn = rxn + N
    cdef double* u0 = ryn + N
    cdef double* u1 = u0 + K
    cdef double* ginv = u1 + K            # N * 4
    cdef double* chol = ginv + 4 * N      # K * K
    cdef int i, j, k
    cdef double w, g11, g12, g22, det, tr, reg, z0, z1, wd, before, after

    _trig(theta, s, c, K)

    memset(lhs, 0, K * K * sizeof(double))
    memset(rhs, 0, K * sizeof(double))
    for j in range(K):
        for i in range(N):
            lhs[j * K + j] += W[i * K + j]
            rhs[j] += W[i * K + j] * D[i * K + j]

    for i in range(1, N):
        g11 = 0.0
        g12 = 0.0
        g22 = 0.0
        for j in range(K):
            w = W[i * K + j]
            g11 += w * s[j] * s[j]
            g12 += w * s[j] * c[j]
            g22 += w * c[j] * c[j]
        det = g11 * g22 - g12 * g12
        tr = g11 + g22
        if det <= 1e-12 * _dmax(tr * tr, 1e-300):
            reg = 1e-9 * _dmax(tr, 1e-12)
            g11 += reg
            g22 += reg
            det = g11 * g22 - g12 * g12
        ginv[4 * i + 0] = g22 / det
        ginv[4 * i + 1] = -g12 / det
        ginv[4 * i + 2] = -g12 / det
        ginv[4 * i + 3] = g11 / det
        # u_k = Ginv @ n_k; z = sum_k w_k D_ik u_k
        z0 = 0.0
        z1 = 0.0
        for k in range(K):
            u0[k] = ginv[4 * i + 0] * s[k] + ginv[4 * i + 1] * c[k]
            u1[k] = ginv[4 * i + 2] * s[k] + ginv[4 * i + 3] * c[k]
            wd = W[i * K + k] * D[i * K + k]
            z0 += wd * u0[k]
            z1 += wd * u1[k]
        for j in range(K):
            w = W[i * K + j]
            rhs[j] -= w * (s[j] * z0 + c[j] * z1)
            for k in range(K):
                lhs[j * K + k] -= w * W[i * K + k] * (s[j] * u0[k] + c[j] * u1[k])

    memcpy(chol, lhs, K * K * sizeof(double))
    if _chol_solve(chol, rhs, qn, K) != 0:
        # degenerate normal system: retry once with a diagonal jitter
        memcpy(chol, lhs, K * K * sizeof(double))
        for j in range(K):
            chol[j * K + j] += 1e-9 * (1.0 + fabs(lhs[j * K + j]))
        if _chol_solve(chol, rhs, qn, K) != 0:
            return

    for i in range(N):
        rxn[i] = rx[i]
        ryn[i] = ry[i]
    for i in range(1, N):
        z0 = 0.0
        z1 = 0.0
        for j in range(K):
            w = W[i * K + j] * (qn[j] - D[i * K + j])
            z0 += w * s[j]
            z1 += w * c[j]
        rxn[i] = ginv[4 * i + 0] * z0 + ginv[4 * i + 1] * z1
        ryn[i] = ginv[4 * i + 2] * z0 + ginv[4 * i + 3] * z1

    before = _cost_raw(D, W, s, c, q, rx, ry, N, K)
    after = _cost_raw(D, W, s, c, qn, rxn, ryn, N, K)
    if after <= before:
        memcpy(q, qn, K * sizeof(double))
        memcpy(rx, rxn, N * sizeof(double))
        memcpy(ry, ryn, N * sizeof(double))


cdef inline double _angle_objective(double t, double a11, double a12, double a22,
                                    double b1, double b2) noexcept nogil:
    cdef double st = sin(t)
    cdef double ct = cos(t)
    return a11 * st * st + 2.0 * a12 * st * ct + a22 * ct * ct + 2.0 * (b1 * st + b2 * ct)


cdef void _update_angles(double* D, double* W, double* theta,
                         double* q, double* rx, double* ry,
                         int N, int K, int grid_size) noexcept nogil:
    cdef int i, j, m, it
    cdef double a11, a12, a22, b1, b2, w, beta
    cdef double best_t, best_val, t, val, st, ct, s2, c2, d1, d2, step, t_new
    for j in range(1, K):
        a11 = 0.0
        a12 = 0.0
        a22 = 0.0
        b1 = 0.0
        b2 = 0.0
        for i in range(N):
            w = W[i * K + j]
            beta = D[i * K + j] - q[j]
            a11 += w * rx[i] * rx[i]
            a12 += w * rx[i] * ry[i]
            a22 += w * ry[i] * ry[i]
            b1 += w * beta * rx[i]
            b2 += w * beta * ry[i]

        best_t = theta[j]
        best_val = _angle_objective(best_t, a11, a12, a22, b1, b2)
        for m in range(grid_size):
            t = 2.0 * M_PI * m / grid_size
            val = _angle_objective(t, a11, a12, a22, b1, b2)
            if val < best_val:
                best_val = val
                best_t = t

        t = best_t
        for it in range(12):
            st = sin(t)
            ct = cos(t)
            s2 = 2.0 * st * ct
            c2 = ct * ct - st * st
            d1 = (a11 - a22) * s2 + 2.0 * a12 * c2 + 2.0 * (b1 * ct - b2 * st)
            d2 = 2.0 * (a11 - a22) * c2 - 4.0 * a12 * s2 - 2.0 * (b1 * st + b2 * ct)
            if d2 <= 0 or not isfinite(d1):
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
            if fabs(step) < 1e-15:
                break
        theta[j] = best_t


def run_restart(double[:, ::1] D, double[:, ::1] W,
                double[::1] theta, double[::1] q, double[::1] rx, double[::1] ry,
                int max_alt_iters, double cost_tol,
                int max_polish_iters, double grad_tol,
                int grid_size=64):
    """Optimize one start in place; same contract as the Python backend."""
    cdef int N = D.shape[0]
    cdef int K = D.shape[1]
    cdef int m = (K - 1) + K + 2 * (N - 1)
    # scratch: s c lhs rhs qn rxn ryn u0 u1 ginv chol
    cdef int scratch_len = 2 * K + K * K + K + K + 2 * N + 2 * K + 4 * N + K * K
    # lm: H Hd bvec negb step diag tht qt rxt ryt
    cdef int lm_len = 2 * m * m + 4 * m + 2 * K + 2 * N
    cdef double* buf = <double*> malloc((scratch_len + lm_len) * sizeof(double))
    if buf == NULL:
        raise MemoryError()

    cdef double* dptr = &D[0, 0]
    cdef double* wptr = &W[0, 0]
    cdef double* th = &theta[0]
    cdef double* qq = &q[0]
    cdef double* rxp = &rx[0]
    cdef double* ryp = &ry[0]

    trace = []
    cdef double* s = buf
    cdef double* c = buf + K
    cdef double cost, new_cost, decrease
    cdef int alt_iters = 0

    _trig(th, s, c, K)
    cost = _cost_raw(dptr, wptr, s, c, qq, rxp, ryp, N, K)
    trace.append(cost)

    cdef int sweep
    for sweep in range(1, max_alt_iters + 1):
        alt_iters = sweep
        _solve_linear_block(dptr, wptr, th, qq, rxp, ryp, N, K, buf)
        _update_angles(dptr, wptr, th, qq, rxp, ryp, N, K, grid_size)
        _trig(th, s, c, K)
        new_cost = _cost_raw(dptr, wptr, s, c, qq, rxp, ryp, N, K)
        trace.append(new_cost)
        decrease = cost - new_cost
        cost = new_cost
        if decrease < cost_tol:
            break

    # --- Levenberg-Marquardt polish ---
    cdef double* lmbuf = buf + scratch_len
    cdef double* H = lmbuf
    cdef double* Hd = H + m * m
    cdef double* bvec = Hd + m * m
    cdef double* negb = bvec + m
    cdef double* step = negb + m
    cdef double* diag = step + m
    cdef double* tht = diag + m
    cdef double* qt = tht + K
    cdef double* rxt = qt + K
    cdef double* ryt = rxt + N
    cdef int idxs[4]
    cdef double vals[4]

    cdef double lam = 1e-3
    cdef int converged = 0, lm_iters = 0, it2, i, j, a, bb, cnt, tries, accepted
    cdef double w, f, wf, gmax, trial, g2, hmax, floor

    _trig(th, s, c, K)
    cost = _cost_raw(dptr, wptr, s, c, qq, rxp, ryp, N, K)

    for it2 in range(1, max_polish_iters + 1):
        lm_iters = it2
        _trig(th, s, c, K)
        memset(H, 0, m * m * sizeof(double))
        memset(bvec, 0, m * sizeof(double))
        for i in range(N):
            for j in range(K):
                w = wptr[i * K + j]
                f = dptr[i * K + j] - qq[j] + rxp[i] * s[j] + ryp[i] * c[j]
                wf = w * f
                cnt = 0
                if j >= 1:
                    idxs[cnt] = j - 1
                    vals[cnt] = c[j] * rxp[i] - s[j] * ryp[i]
                    cnt += 1
                idxs[cnt] = K - 1 + j
                vals[cnt] = -1.0
                cnt += 1
                if i >= 1:
                    idxs[cnt] = 2 * K - 1 + i - 1
                    vals[cnt] = s[j]
                    cnt += 1
                    idxs[cnt] = 2 * K - 1 + N - 1 + i - 1
                    vals[cnt] = c[j]
                    cnt += 1
                for a in range(cnt):
                    bvec[idxs[a]] += wf * vals[a]
                    for bb in range(cnt):
                        H[idxs[a] * m + idxs[bb]] += w * vals[a] * vals[bb]

        gmax = 0.0
        for a in range(m):
            g2 = fabs(2.0 * bvec[a])
            if g2 > gmax:
                gmax = g2
        if gmax < grad_tol:
            converged = 1
            break

        hmax = 0.0
        for a in range(m):
            diag[a] = H[a * m + a] if H[a * m + a] > 0 else 1.0
            if H[a * m + a] > hmax:
                hmax = H[a * m + a]
            negb[a] = -bvec[a]

        accepted = 0
        for tries in range(16):
            memcpy(Hd, H, m * m * sizeof(double))
            for a in range(m):
                Hd[a * m + a] += lam * diag[a]
            if _chol_solve(Hd, negb, step, m) != 0:
                lam *= 4.0
                continue
            memcpy(tht, th, K * sizeof(double))
            memcpy(qt, qq, K * sizeof(double))
            memcpy(rxt, rxp, N * sizeof(double))
            memcpy(ryt, ryp, N * sizeof(double))
            for j in range(1, K):
                tht[j] += step[j - 1]
            for j in range(K):
                qt[j] += step[K - 1 + j]
            for i in range(1, N):
                rxt[i] += step[2 * K - 1 + i - 1]
                ryt[i] += step[2 * K - 1 + N - 1 + i - 1]
            _trig(tht, s, c, K)
            trial = _cost_raw(dptr, wptr, s, c, qt, rxt, ryt, N, K)
            if trial < cost:
                memcpy(th, tht, K * sizeof(double))
                memcpy(qq, qt, K * sizeof(double))
                memcpy(rxp, rxt, N * sizeof(double))
                memcpy(ryp, ryt, N * sizeof(double))
                cost = trial
                lam = lam / 3.0 if lam / 3.0 > 1e-14 else 1e-14
                accepted = 1
                break
            lam *= 4.0
            if lam > 1e15:
                break
        trace.append(cost)
        if accepted == 0:
            # A Gauss-Newton step improves the cost by about g^2 / (4 h); once
            # that falls below the float resolution of the cost no step can be
            # accepted, so a gradient at that floor counts as converged.
            floor = 4.0 * sqrt(hmax * 2.220446049250313e-16 * _dmax(cost, 0.0))
            if gmax <= _dmax(grad_tol, floor):
                converged = 1
            break

    free(buf)
    return cost, alt_iters + lm_iters, bool(converged), np.asarray(trace)
