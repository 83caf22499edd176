"""File formats: geometry JSON, echo CSV (+ metadata sidecar), result JSON.

Geometry JSON schema::

    {"dimension": 2,
     "walls": [{"normal": [nx, ny], "offset": q}, ...],
     "trajectory": [[x, y], ...],
     "labels": ["wall-0", ...]}

A vertices form ``{"vertices": [[x, y], ...]}`` is also accepted on input.
Echo CSV files start with the version comment ``# echoroom-csv v1``, then a
header row of wall labels and one row per measurement; unobserved entries are
empty fields.  A sidecar ``<name>.meta.json`` carries sigma, the speed of
sound, and the seed.
"""

from __future__ import annotations

import json
import os

import numpy as np

from .geometry import Room, Trajectory, Wall, room_from_vertices
from .reconstruction import Reconstruction
from .sim import EchoMatrix, SimConfig

CSV_VERSION = "# echoroom-csv v1"


def _fmt(x: float) -> str:
    if isinstance(x, float) and np.isnan(x):
        return "nan"
    return repr(float(x))


def geometry_to_dict(room: Room | None = None, trajectory: Trajectory | None = None) -> dict:
    out: dict = {}
    if room is not None:
        out["dimension"] = room.dimension
        out["walls"] = [
            {"normal": [float(v) for v in w.normal], "offset": float(w.offset)} for w in room.walls
        ]
        out["labels"] = list(room.labels)
    if trajectory is not None:
        out["trajectory"] = [[float(v) for v in p] for p in trajectory.points]
    return out


def room_from_dict(data: dict) -> Room:
    if "walls" in data:
        labels = tuple(data.get("labels", ()))
        walls = tuple(
            Wall(normal=np.array(w["normal"], dtype=float), offset=float(w["offset"]))
            for w in data["walls"]
        )
        return Room(walls=walls, dimension=int(data.get("dimension", 2)), labels=labels)
    if "vertices" in data:
        return room_from_vertices(data["vertices"], labels=data.get("labels"))
    raise ValueError("geometry JSON needs a 'walls' or 'vertices' key")


def trajectory_from_dict(data) -> Trajectory:
    if isinstance(data, dict):
        if "trajectory" not in data:
            raise ValueError("geometry JSON has no 'trajectory' key")
        data = data["trajectory"]
    return Trajectory(points=np.array(data, dtype=float))


def save_geometry(path, room: Room | None = None, trajectory: Trajectory | None = None):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(geometry_to_dict(room, trajectory), fh, indent=2)
        fh.write("\n")


def load_geometry(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def sidecar_path(csv_path) -> str:
    return str(csv_path) + ".meta.json"


def save_echo_csv(path, echo: EchoMatrix, cfg: SimConfig | None = None):
    lines = [CSV_VERSION, ",".join(echo.labels)]
    for i in range(echo.num_measurements):
        cells = []
        for j in range(echo.num_walls):
            cells.append(_fmt(echo.entries[i, j]) if echo.mask[i, j] else "")
        lines.append(",".join(cells))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    if cfg is not None:
        meta = {
            "noise_sigma": cfg.noise_sigma,
            "speed_of_sound": cfg.speed_of_sound,
            "rng_seed": cfg.rng_seed,
        }
        with open(sidecar_path(path), "w", encoding="utf-8") as fh:
            json.dump(meta, fh, indent=2)
            fh.write("\n")


def load_echo_csv(path) -> tuple[EchoMatrix, dict]:
    """Read an echo CSV; returns the matrix and the sidecar metadata (or {})."""
    with open(path, "r", encoding="utf-8") as fh:
        rows = [line.rstrip("\n") for line in fh if line.strip()]
    rows = [r for r in rows if not r.lstrip().startswith("#")]
    if not rows:
        raise ValueError(f"{path}: no data rows")
    labels = tuple(cell.strip() for cell in rows[0].split(","))
    entries = []
    mask = []
    for row in rows[1:]:
        cells = row.split(",")
        if len(cells) != len(labels):
            raise ValueError(f"{path}: row has {len(cells)} cells, expected {len(labels)}")
        entries.append([float(c) if c.strip() else np.nan for c in cells])
        mask.append([bool(c.strip()) for c in cells])
    meta = {}
    if os.path.exists(sidecar_path(path)):
        with open(sidecar_path(path), "r", encoding="utf-8") as fh:
            meta = json.load(fh)
    echo = EchoMatrix(entries=np.array(entries), mask=np.array(mask), labels=labels)
    return echo, meta


def reconstruction_to_dict(rec: Reconstruction) -> dict:
    return {
        "geometry": geometry_to_dict(rec.room, rec.trajectory),
        "cost": float(rec.cost),
        "max_abs_residual": rec.max_abs_residual,
        "residuals": [[float(v) for v in row] for row in rec.residuals],
        "diagnostics": rec.diagnostics.to_json_dict(),
    }


def save_reconstruction(path, rec: Reconstruction):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(reconstruction_to_dict(rec), fh, indent=2)
        fh.write("\n")
