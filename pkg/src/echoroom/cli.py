"""Command-line front end: simulate | solve | sweep | ambiguity | complete | rank.

Exit codes: 0 success; 2 validation or input error; 3 solver did not converge
(result JSON still written); 4 ambiguous configuration detected (JSON with
the error detail still written).  Every command is a pure function of its
input files, flags, and seeds.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

from . import __version__
from .ambiguity import make_collinear_family, make_parallelogram_family, rigid_congruence
from .errors import AmbiguousConfiguration, EchoRoomError
from .generators import collinear_trajectory, room_from_spec, trajectory_from_spec
from .io import (
    geometry_to_dict,
    load_echo_csv,
    load_geometry,
    room_from_dict,
    save_echo_csv,
    save_geometry,
    save_reconstruction,
    trajectory_from_dict,
)
from .rank import complete_matrix, rank_report
from .sim import SimConfig, echo_matrix
from .stress import SolverOptions, StressProblem, solve_auto, solve_stress, suspected_ambiguity
from .sweep import SweepConfig, resolve_workers, run_sweep, write_aggregate_csv, write_trials_csv


def _load_room(spec: str):
    if os.path.exists(spec):
        return room_from_dict(load_geometry(spec))
    return room_from_spec(spec)


def _load_traj(spec: str, room, seed=None):
    if os.path.exists(spec):
        return trajectory_from_dict(load_geometry(spec))
    return trajectory_from_spec(spec, room, seed_override=seed)


def cmd_simulate(args) -> int:
    room = _load_room(args.room)
    if args.traj:
        traj = _load_traj(args.traj, room)
    else:
        data = load_geometry(args.room) if os.path.exists(args.room) else None
        if not data or "trajectory" not in data:
            print("simulate: no trajectory given (use --traj)", file=sys.stderr)
            return 2
        traj = trajectory_from_dict(data)
    cfg = SimConfig(noise_sigma=args.sigma, rng_seed=args.seed, speed_of_sound=args.speed_of_sound)
    echo = echo_matrix(room, traj, cfg)
    save_echo_csv(args.out, echo, cfg)
    print(f"wrote {args.out}: {echo.num_measurements} measurements x {echo.num_walls} walls")
    return 0


def _solver_options(args) -> SolverOptions:
    return SolverOptions(restarts=args.restarts, rng_seed=args.seed)


def cmd_solve(args) -> int:
    echo, meta = load_echo_csv(args.echo)
    sigma = float(meta.get("noise_sigma", args.sigma or 0.0))
    completion_note = None
    if not echo.is_complete:
        result = complete_matrix(echo)
        completion_note = (
            f"completed {int((~echo.mask).sum())} missing entries "
            f"(converged={result.converged}, observed_max_abs={result.observed_max_abs:.3e})"
        )
        echo = result.echo

    exit_code = 0
    try:
        if args.mode == "algebraic":
            from .algebraic import solve_noiseless

            rec = solve_noiseless(echo, noise_sigma=sigma)
        elif args.mode == "stress":
            rec = solve_stress(StressProblem(echo=echo), _solver_options(args))
        else:
            rec = solve_auto(echo, _solver_options(args), noise_sigma=sigma)
    except AmbiguousConfiguration as exc:
        if args.out:
            with open(args.out, "w", encoding="utf-8") as fh:
                json.dump({"error": "AmbiguousConfiguration", "detail": str(exc)}, fh, indent=2)
                fh.write("\n")
        print(f"ambiguous configuration: {exc}", file=sys.stderr)
        return 4

    if completion_note:
        rec.diagnostics.notes = rec.diagnostics.notes + (completion_note,)
    suspicious = args.mode != "algebraic" and suspected_ambiguity(rec)
    if suspicious:
        rec.diagnostics.notes = rec.diagnostics.notes + ("ambiguity suspected: tied non-congruent solutions",)
        exit_code = 4
    elif not rec.diagnostics.converged:
        exit_code = 3
    if args.out:
        save_reconstruction(args.out, rec)
    print(
        f"cost={rec.cost:.6e} max_abs_residual={rec.max_abs_residual:.6e} "
        f"converged={rec.diagnostics.converged} method={rec.diagnostics.method}"
    )
    return exit_code


def cmd_sweep(args) -> int:
    cfg = SweepConfig(
        sigma_start=args.sigma_start,
        sigma_end=args.sigma_end,
        sigma_step=args.sigma_step,
        trials_per_sigma=args.trials,
        room_spec=args.room if not os.path.exists(args.room) else load_geometry(args.room),
        traj_spec=args.traj,
        mode=args.mode,
        restarts=args.restarts,
        master_seed=args.seed,
        workers=args.workers,
    )
    agg_path = args.agg_out or (os.path.splitext(args.out)[0] + ".agg.csv")
    result = run_sweep(cfg)
    write_trials_csv(args.out, result)
    write_aggregate_csv(agg_path, result)
    if result.interrupted:
        print(f"interrupted; flushed {len(result.trials)} partial trials to {args.out}", file=sys.stderr)
        return 130
    print(
        f"wrote {args.out} ({len(result.trials)} trials) and {agg_path} "
        f"({len(cfg.sigmas())} sigma values, workers={resolve_workers(cfg.workers)})"
    )
    return 0


def cmd_ambiguity(args) -> int:
    if args.family == "parallelogram":
        room = _load_room(args.room)
        traj = _load_traj(args.traj, room, seed=args.seed) if args.traj else _load_traj(
            "random-interior 3", room, seed=args.seed
        )
        pair = make_parallelogram_family(room, traj, math.radians(args.alpha), math.radians(args.beta))
    else:
        room = _load_room(args.room)
        if args.offsets:
            offsets = [float(x) for x in args.offsets.split(",")]
            point = [float(x) for x in args.line_point.split(",")]
            angle = math.radians(args.line_angle)
            direction = (math.cos(angle), math.sin(angle))
            pair = make_collinear_family(room, point, direction, offsets)
        else:
            traj, point, direction, offsets = collinear_trajectory(room, args.n, args.seed)
            pair = make_collinear_family(room, point, direction, offsets)

    verdict = rigid_congruence(pair.room_a, pair.traj_a, pair.room_b, pair.traj_b)
    prefix = args.out
    save_geometry(f"{prefix}_a.json", pair.room_a, pair.traj_a)
    save_geometry(f"{prefix}_b.json", pair.room_b, pair.traj_b)
    save_echo_csv(f"{prefix}_echo.csv", pair.echo, SimConfig())
    bundle = {
        "family": pair.family,
        "family_parameter": pair.family_parameter,
        "max_deviation": pair.max_deviation,
        "verdict": verdict.verdict,
        "congruence_error": verdict.max_error,
        "files": [f"{prefix}_a.json", f"{prefix}_b.json", f"{prefix}_echo.csv"],
    }
    with open(f"{prefix}.json", "w", encoding="utf-8") as fh:
        json.dump(bundle, fh, indent=2)
        fh.write("\n")
    print(f"max |D_a - D_b| = {pair.max_deviation:.3e}; verdict: {verdict.verdict}")
    return 0


def cmd_complete(args) -> int:
    echo, meta = load_echo_csv(args.echo)
    result = complete_matrix(echo, fit_tol=args.fit_tol)
    save_echo_csv(args.out, result.echo)
    print(
        f"completed {int((~echo.mask).sum())} entries in {result.iterations} sweeps; "
        f"converged={result.converged} observed_max_abs={result.observed_max_abs:.3e}"
    )
    return 0 if result.converged else 3


def cmd_rank(args) -> int:
    echo, _ = load_echo_csv(args.echo)
    report = rank_report(echo, dimension=args.dimension, tol=args.tol)
    print(
        json.dumps(
            {
                "singular_values": list(report.singular_values),
                "numerical_rank": report.numerical_rank,
                "gap_ratio": report.gap_ratio,
            },
            indent=2,
        )
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="echoroom",
        description="Simulate first-order echoes in convex 2-D rooms and reconstruct geometry from them.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate an echo matrix CSV")
    p.add_argument("--room", required=True, help="geometry JSON file or generator (e.g. 'square', 'random-convex 5 3')")
    p.add_argument("--traj", help="trajectory JSON file or generator (e.g. 'random-interior 8 3')")
    p.add_argument("--sigma", type=float, default=0.0, help="distance noise standard deviation (m)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--speed-of-sound", type=float, default=343.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("solve", help="reconstruct room and trajectory from an echo CSV")
    p.add_argument("--echo", required=True)
    p.add_argument("--mode", choices=("algebraic", "stress", "auto"), default="auto")
    p.add_argument("--restarts", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sigma", type=float, help="noise level when no sidecar metadata exists")
    p.add_argument("--out", help="reconstruction JSON path")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="noise sweep: solve many noisy trials per sigma")
    p.add_argument("--sigma-start", type=float, default=0.0)
    p.add_argument("--sigma-end", type=float, default=0.15)
    p.add_argument("--sigma-step", type=float, default=0.005)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--room", default="regular-5", help="geometry JSON file or generator")
    p.add_argument("--traj", default="random-interior 8", help="trajectory generator (per-trial seeds) or file")
    p.add_argument("--mode", choices=("algebraic", "stress", "auto"), default="auto")
    p.add_argument("--restarts", type=int, default=16)
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--workers", type=int, help="worker processes (capped by ECHOROOM_THREADS)")
    p.add_argument("--out", required=True, help="per-trial CSV path")
    p.add_argument("--agg-out", help="aggregate CSV path (default: <out>.agg.csv)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("ambiguity", help="build a pair of distinct configurations with identical echoes")
    p.add_argument("--family", choices=("parallelogram", "collinear"), required=True)
    p.add_argument("--room", default="square", help="base room (rectangle for the parallelogram family)")
    p.add_argument("--traj", help="trajectory file/generator (parallelogram family)")
    p.add_argument("--alpha", type=float, default=75.0, help="first normal angle, degrees")
    p.add_argument("--beta", type=float, default=10.0, help="second normal angle, degrees")
    p.add_argument("--line-point", default="0.4,0.35", help="point on the trajectory line, 'x,y'")
    p.add_argument("--line-angle", type=float, default=0.0, help="line direction, degrees")
    p.add_argument("--offsets", help="comma-separated offsets along the line")
    p.add_argument("--n", type=int, default=3, help="points to place when --offsets is omitted")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output prefix (writes <out>_a.json, <out>_b.json, <out>_echo.csv, <out>.json)")
    p.set_defaults(func=cmd_ambiguity)

    p = sub.add_parser("complete", help="fill masked echo entries using the low-rank structure")
    p.add_argument("--echo", required=True)
    p.add_argument("--fit-tol", type=float, default=1e-8)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_complete)

    p = sub.add_parser("rank", help="singular-value rank certificate of an echo CSV")
    p.add_argument("--echo", required=True)
    p.add_argument("--dimension", type=int, default=2)
    p.add_argument("--tol", type=float, default=1e-10)
    p.set_defaults(func=cmd_rank)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except EchoRoomError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
