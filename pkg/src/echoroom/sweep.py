"""Noise-sweep experiment harness with a deterministic worker pool.

Each (sigma, trial) cell derives its seeds from (master seed, sigma index,
trial index), never from scheduling order, so the output is byte-identical
for any worker count.  Per trial: draw a trajectory, simulate a noisy echo
matrix, solve, and score against the ground truth with gauge-invariant
errors.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from multiprocessing import get_context

import numpy as np

from .errors import EchoRoomError
from .generators import room_from_spec, trajectory_from_spec
from .io import room_from_dict, trajectory_from_dict
from .metrics import align_and_score
from .sim import SimConfig, echo_matrix, noiseless_matrix
from .stress import SolverOptions, StressProblem, solve_auto, solve_stress

TRIAL_COLUMNS = ("sigma", "trial", "seed", "cost", "vertex_error", "location_error", "converged")
AGG_COLUMNS = (
    "sigma",
    "snr_db",
    "trials",
    "median_vertex_error",
    "mean_vertex_error",
    "q25_vertex_error",
    "q75_vertex_error",
    "median_location_error",
    "mean_location_error",
    "q25_location_error",
    "q75_location_error",
    "converged_fraction",
)


@dataclass
class SweepConfig:
    """Protocol of one noise sweep (the full-scale defaults mirror the
    0-to-0.15-step-0.005, 1000-trial experiment; desk scale uses fewer trials)."""

    sigma_start: float = 0.0
    sigma_end: float = 0.15
    sigma_step: float = 0.005
    trials_per_sigma: int = 100
    room_spec: str | dict = "regular-5"
    traj_spec: str | dict = "random-interior 8"
    mode: str = "auto"
    restarts: int = 16
    master_seed: int = 0
    workers: int | None = None

    def __post_init__(self):
        if self.sigma_step <= 0:
            raise ValueError("sigma_step must be positive")
        if self.trials_per_sigma < 1:
            raise ValueError("trials_per_sigma must be at least 1")
        if self.mode not in ("auto", "stress", "algebraic"):
            raise ValueError("mode must be auto, stress, or algebraic")

    def sigmas(self) -> list[float]:
        count = int(round((self.sigma_end - self.sigma_start) / self.sigma_step))
        return [self.sigma_start + i * self.sigma_step for i in range(count + 1)]


@dataclass
class TrialResult:
    sigma_index: int
    trial: int
    sigma: float
    seed: int
    cost: float
    vertex_error: float
    location_error: float
    converged: bool
    snr_db: float


@dataclass
class SweepResult:
    config: SweepConfig
    trials: list[TrialResult] = field(default_factory=list)
    interrupted: bool = False

    def aggregate_rows(self) -> list[dict]:
        rows = []
        by_sigma: dict[int, list[TrialResult]] = {}
        for t in self.trials:
            by_sigma.setdefault(t.sigma_index, []).append(t)
        for si in sorted(by_sigma):
            group = sorted(by_sigma[si], key=lambda t: t.trial)
            ve = np.array([t.vertex_error for t in group])
            le = np.array([t.location_error for t in group])
            snr = np.array([t.snr_db for t in group])
            rows.append(
                {
                    "sigma": group[0].sigma,
                    "snr_db": float(np.mean(snr)),
                    "trials": len(group),
                    "median_vertex_error": float(np.nanmedian(ve)),
                    "mean_vertex_error": float(np.nanmean(ve)),
                    "q25_vertex_error": float(np.nanpercentile(ve, 25)),
                    "q75_vertex_error": float(np.nanpercentile(ve, 75)),
                    "median_location_error": float(np.nanmedian(le)),
                    "mean_location_error": float(np.nanmean(le)),
                    "q25_location_error": float(np.nanpercentile(le, 25)),
                    "q75_location_error": float(np.nanpercentile(le, 75)),
                    "converged_fraction": float(np.mean([t.converged for t in group])),
                }
            )
        return rows


def resolve_workers(requested: int | None) -> int:
    """Requested worker count capped by the ECHOROOM_THREADS environment variable."""
    workers = requested if requested and requested > 0 else (os.cpu_count() or 1)
    cap = os.environ.get("ECHOROOM_THREADS", "").strip()
    if cap:
        workers = min(workers, max(1, int(cap)))
    return max(1, workers)


def _build_room(spec):
    if isinstance(spec, dict):
        return room_from_dict(spec)
    return room_from_spec(spec)


def run_trial(args: tuple) -> TrialResult:
    """One (sigma, trial) cell; must stay importable for worker processes."""
    (si, sigma, trial, room_spec, traj_spec, mode, restarts, master_seed) = args
    ss = np.random.SeedSequence(entropy=(int(master_seed), int(si), int(trial)))
    traj_ss, noise_ss, solver_ss = ss.spawn(3)
    noise_seed = int(noise_ss.generate_state(1, dtype=np.uint64)[0])
    solver_seed = int(solver_ss.generate_state(1, dtype=np.uint64)[0])

    room = _build_room(room_spec)
    if isinstance(traj_spec, dict) or isinstance(traj_spec, list):
        traj = trajectory_from_dict(traj_spec)
    else:
        traj = trajectory_from_spec(traj_spec, room, seed_override=traj_ss)

    clean = noiseless_matrix(room, traj)
    snr_db = math.inf if sigma == 0 else 20.0 * math.log10(float(np.sqrt(np.mean(clean**2))) / sigma)

    cfg = SimConfig(noise_sigma=sigma, rng_seed=noise_seed)
    echo = echo_matrix(room, traj, cfg)

    opts = SolverOptions(restarts=restarts, rng_seed=solver_seed)
    cost = math.nan
    vertex_error = math.nan
    location_error = math.nan
    converged = False
    try:
        if mode == "auto":
            rec = solve_auto(echo, opts, noise_sigma=sigma)
        elif mode == "stress":
            rec = solve_stress(StressProblem(echo=echo), opts)
        else:
            from .algebraic import solve_noiseless

            rec = solve_noiseless(echo, noise_sigma=sigma)
        cost = rec.cost
        converged = rec.diagnostics.converged
        report = align_and_score((room, traj), (rec.room, rec.trajectory))
        vertex_error = report.vertex_error
        location_error = report.location_error
    except EchoRoomError:
        converged = False
    return TrialResult(
        sigma_index=si,
        trial=trial,
        sigma=sigma,
        seed=noise_seed,
        cost=cost,
        vertex_error=vertex_error,
        location_error=location_error,
        converged=converged,
        snr_db=snr_db,
    )


def run_sweep(cfg: SweepConfig, progress=None) -> SweepResult:
    """Run all trials on a worker pool; deterministic for any worker count."""
    sigmas = cfg.sigmas()
    room_spec = cfg.room_spec
    tasks = [
        (si, sigma, trial, room_spec, cfg.traj_spec, cfg.mode, cfg.restarts, cfg.master_seed)
        for si, sigma in enumerate(sigmas)
        for trial in range(cfg.trials_per_sigma)
    ]
    workers = resolve_workers(cfg.workers)
    result = SweepResult(config=cfg)
    try:
        if workers == 1:
            for task in tasks:
                result.trials.append(run_trial(task))
                if progress:
                    progress(len(result.trials), len(tasks))
        else:
            ctx = get_context("fork")
            with ctx.Pool(processes=workers) as pool:
                for out in pool.imap(run_trial, tasks, chunksize=4):
                    result.trials.append(out)
                    if progress:
                        progress(len(result.trials), len(tasks))
    except KeyboardInterrupt:
        # keep whatever completed so callers can flush partial results
        result.interrupted = True
    result.trials.sort(key=lambda t: (t.sigma_index, t.trial))
    return result


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, int):
        return str(value)
    v = float(value)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return repr(v)


def write_trials_csv(path, result: SweepResult):
    lines = ["# echoroom-csv v1", ",".join(TRIAL_COLUMNS)]
    for t in result.trials:
        lines.append(
            ",".join(
                [
                    _fmt(t.sigma),
                    str(t.trial),
                    str(t.seed),
                    _fmt(t.cost),
                    _fmt(t.vertex_error),
                    _fmt(t.location_error),
                    _fmt(t.converged),
                ]
            )
        )
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def write_aggregate_csv(path, result: SweepResult):
    lines = [
        "# echoroom-csv v1",
        "# snr_db = 20*log10(rms(D)/sigma); rms over the noiseless matrix (tool convention)",
        ",".join(AGG_COLUMNS),
    ]
    for row in result.aggregate_rows():
        lines.append(",".join(_fmt(row[c]) if not isinstance(row[c], int) else str(row[c]) for c in AGG_COLUMNS))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
