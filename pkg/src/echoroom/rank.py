"""Low-rank structure of the echo matrix: certification and completion.

A noiseless echo matrix factors as ``-R^T N + 1 q^T`` and therefore has rank
at most ``d + 1``.  That structure certifies simulated data and lets missing
entries be recovered by alternating least squares on the factorization with
the all-ones column pinned.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InsufficientObservations
from .sim import EchoMatrix


@dataclass(frozen=True)
class RankReport:
    """Singular value summary of a fully observed echo matrix."""

    singular_values: tuple[float, ...]
    numerical_rank: int
    gap_ratio: float

    def __post_init__(self):
        sv = tuple(float(s) for s in self.singular_values)
        if any(s < 0 for s in sv) or any(b > a for a, b in zip(sv, sv[1:])):
            raise ValueError("singular values must be nonnegative and descending")
        object.__setattr__(self, "singular_values", sv)


def rank_report(echo: EchoMatrix, dimension: int = 2, tol: float = 1e-10) -> RankReport:
    """SVD-based rank certificate for a complete echo matrix.

    ``numerical_rank`` counts singular values above ``tol * sigma_1`` and
    ``gap_ratio`` is ``sigma_{d+2} / sigma_1`` (0.0 when the matrix is too
    small for that singular value to exist, in which case the rank bound holds
    trivially).  Raise ``tol`` for noisy matrices.
    """
    echo.require_complete()
    s = np.linalg.svd(echo.entries, compute_uv=False)
    s1 = float(s[0]) if s.size else 0.0
    if s1 == 0.0:
        rank = 0
    else:
        rank = int(np.sum(s > tol * s1))
    gap = float(s[dimension + 1] / s1) if s.size > dimension + 1 and s1 > 0 else 0.0
    return RankReport(singular_values=tuple(float(v) for v in s), numerical_rank=rank, gap_ratio=gap)


@dataclass
class CompletionResult:
    """Completed matrix plus convergence evidence.

    ``converged`` is True when the observed entries are reproduced within
    ``fit_tol``; otherwise the best iterate is still returned so callers can
    inspect it.  ``residual_trace`` holds the observed-entry RMS after every
    alternating sweep and never increases.
    """

    echo: EchoMatrix
    converged: bool
    iterations: int
    observed_rms: float
    observed_max_abs: float
    residual_trace: tuple[float, ...]


def _als_pass(entries, mask, factors_u, factors_v, dimension):
    """One alternating sweep; exact least squares per row and per column."""
    n, k = entries.shape
    for j in range(k):
        rows = mask[:, j]
        a = factors_u[rows]
        factors_v[j] = np.linalg.lstsq(a, entries[rows, j], rcond=None)[0]
    for i in range(n):
        cols = mask[i]
        a = factors_v[cols][:, :dimension]
        b = entries[i, cols] - factors_v[cols][:, dimension]
        factors_u[i, :dimension] = np.linalg.lstsq(a, b, rcond=None)[0]
    return factors_u, factors_v


def _initial_factors(entries, mask, dimension, rng=None):
    n, k = entries.shape
    filled = entries.copy()
    row_means = np.array([entries[i, mask[i]].mean() for i in range(n)])
    for i in range(n):
        filled[i, ~mask[i]] = row_means[i]
    if rng is not None:
        filled = filled + rng.standard_normal(filled.shape) * max(1.0, np.abs(filled).max())
    centered = filled - filled.mean(axis=0, keepdims=True)
    u, s, _ = np.linalg.svd(centered, full_matrices=False)
    factors_u = np.ones((n, dimension + 1))
    factors_u[:, :dimension] = u[:, :dimension] * s[:dimension][None, :]
    factors_v = np.zeros((k, dimension + 1))
    return factors_u, factors_v


def complete_matrix(
    echo: EchoMatrix,
    dimension: int = 2,
    *,
    fit_tol: float = 1e-8,
    max_iters: int = 500,
    rel_tol: float = 1e-12,
    restarts: int = 4,
    rng_seed: int = 0,
) -> CompletionResult:
    """Fill unobserved echo entries using the rank-(d+1) factorization.

    The factorization is ``D ~= U V^T`` where the last column of ``U`` is
    pinned to ones (the offset term), so the fitted model always has the
    structure of a genuine distance matrix.  Observed entries are returned
    unchanged; only the missing ones are filled from the fit.

    Alternating sweeps minimize the squared error on observed entries, so the
    residual trace is monotone.  The deterministic start (row-mean fill plus
    truncated SVD) occasionally stalls in a poor fit; up to ``restarts - 1``
    seeded random re-initializations are then tried before reporting failure.

    Raises
    ------
    InsufficientObservations
        If some row or column has fewer than ``dimension + 1`` observed
        entries, which makes its factor underdetermined.
    """
    entries = np.array(echo.entries, dtype=float)
    mask = np.array(echo.mask, dtype=bool)
    n, k = entries.shape
    need = dimension + 1
    row_counts = mask.sum(axis=1)
    col_counts = mask.sum(axis=0)
    if row_counts.min() < need:
        raise InsufficientObservations(
            f"row {int(row_counts.argmin())} has {int(row_counts.min())} observed entries; need {need}"
        )
    if col_counts.min() < need:
        raise InsufficientObservations(
            f"column {int(col_counts.argmin())} has {int(col_counts.min())} observed entries; need {need}"
        )

    if echo.is_complete:
        return CompletionResult(
            echo=echo, converged=True, iterations=0, observed_rms=0.0, observed_max_abs=0.0, residual_trace=()
        )

    entries_fit = np.where(mask, entries, 0.0)
    num_observed = int(mask.sum())
    best = None
    rng_master = np.random.default_rng(rng_seed)

    for attempt in range(max(1, restarts)):
        rng = None if attempt == 0 else rng_master
        factors_u, factors_v = _initial_factors(entries_fit, mask, dimension, rng=rng)
        trace = []
        prev = np.inf
        iterations = 0
        for iterations in range(1, max_iters + 1):
            factors_u, factors_v = _als_pass(entries_fit, mask, factors_u, factors_v, dimension)
            model = factors_u @ factors_v.T
            resid = (model - entries_fit)[mask]
            rms = float(np.sqrt(np.mean(resid**2)))
            trace.append(rms)
            if prev - rms < rel_tol * max(prev, 1e-300):
                break
            prev = rms
        model = factors_u @ factors_v.T
        resid = (model - entries_fit)[mask]
        rms = float(np.sqrt(np.sum(resid**2) / num_observed))
        max_abs = float(np.max(np.abs(resid)))
        if best is None or rms < best[0]:
            best = (rms, max_abs, model, iterations, tuple(trace))
        if max_abs <= fit_tol:
            break

    rms, max_abs, model, iterations, trace = best
    completed = np.where(mask, entries, model)
    result_echo = EchoMatrix.full(completed, echo.labels)
    return CompletionResult(
        echo=result_echo,
        converged=max_abs <= fit_tol,
        iterations=iterations,
        observed_rms=rms,
        observed_max_abs=max_abs,
        residual_trace=trace,
    )
