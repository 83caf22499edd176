"""Forward model: image sources, wall distances, arrival times, and noise.

A collocated source/receiver measures one first-order echo per wall; the
round-trip path length is exactly twice the point-to-wall distance, so
arrival times and distances are interchangeable through ``tau = 2 d / c``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.special import ndtri

from .errors import MaskedInput, NegativeDistance, PointOutsideRoom
from .geometry import Room, Trajectory, Wall

AMPLITUDE_MODELS = ("unit", "inverse_distance")


@dataclass(frozen=True)
class SimConfig:
    """Simulation knobs: medium, noise, and echo amplitude model.

    ``wall_absorption`` is a single coefficient in [0, 1] applied to every
    wall, or a per-wall sequence.  Noise is additive iid Gaussian in the
    distance domain with standard deviation ``noise_sigma`` (meters).
    """

    speed_of_sound: float = 343.0
    noise_sigma: float = 0.0
    rng_seed: int = 0
    amplitude_model: str = "unit"
    wall_absorption: float | tuple[float, ...] = 0.0

    def __post_init__(self):
        if not self.speed_of_sound > 0:
            raise ValueError("speed_of_sound must be positive")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be nonnegative")
        if self.amplitude_model not in AMPLITUDE_MODELS:
            raise ValueError(f"amplitude_model must be one of {AMPLITUDE_MODELS}")
        absorption = self.wall_absorption
        if np.ndim(absorption) > 0:
            absorption = tuple(float(a) for a in absorption)
        else:
            absorption = float(absorption)
        if np.any(np.asarray(absorption) < 0) or np.any(np.asarray(absorption) > 1):
            raise ValueError("wall_absorption coefficients must lie in [0, 1]")
        object.__setattr__(self, "wall_absorption", absorption)

    def absorption_vector(self, num_walls: int) -> np.ndarray:
        a = np.asarray(self.wall_absorption, dtype=float)
        if a.ndim == 0:
            return np.full(num_walls, float(a))
        if a.shape[0] != num_walls:
            raise ValueError("per-wall absorption length must equal the wall count")
        return a


@dataclass(frozen=True)
class EchoMatrix:
    """N x K matrix of measurement-to-wall distances with an observed mask.

    Masked (unobserved) entries are stored as NaN; observed entries are always
    finite.  Column ``j`` belongs to the wall carrying ``labels[j]``.
    """

    entries: np.ndarray
    mask: np.ndarray
    labels: tuple[str, ...]

    def __post_init__(self):
        entries = np.array(self.entries, dtype=float)
        mask = np.array(self.mask, dtype=bool)
        if entries.ndim != 2:
            raise ValueError("entries must be a 2-D array")
        if mask.shape != entries.shape:
            raise ValueError("mask shape must match entries shape")
        if not np.all(np.isfinite(entries[mask])):
            raise ValueError("observed entries must be finite")
        entries = entries.copy()
        entries[~mask] = np.nan
        labels = tuple(self.labels)
        if len(labels) != entries.shape[1]:
            raise ValueError("one label per wall column required")
        entries.flags.writeable = False
        mask.flags.writeable = False
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "mask", mask)
        object.__setattr__(self, "labels", labels)

    @classmethod
    def full(cls, entries, labels) -> "EchoMatrix":
        entries = np.asarray(entries, dtype=float)
        return cls(entries=entries, mask=np.ones(entries.shape, dtype=bool), labels=tuple(labels))

    @property
    def num_measurements(self) -> int:
        return self.entries.shape[0]

    @property
    def num_walls(self) -> int:
        return self.entries.shape[1]

    @property
    def is_complete(self) -> bool:
        return bool(self.mask.all())

    def observed_fraction(self) -> float:
        return float(self.mask.mean())

    def with_mask(self, mask) -> "EchoMatrix":
        """Copy with additional entries hidden (mask False means unobserved)."""
        mask = np.asarray(mask, dtype=bool)
        return EchoMatrix(entries=self.entries, mask=self.mask & mask, labels=self.labels)

    def require_complete(self):
        if not self.is_complete:
            raise MaskedInput("operation requires a fully observed echo matrix; run completion first")


class Pulse(NamedTuple):
    time: float
    amplitude: float
    label: str


@dataclass(frozen=True)
class RirTrace:
    """Idealized impulse response: one (time, amplitude) pulse per echo."""

    pulses: tuple[Pulse, ...]

    def __post_init__(self):
        pulses = tuple(Pulse(float(t), float(a), str(lab)) for t, a, lab in self.pulses)
        times = [p.time for p in pulses]
        if any(t <= 0 for t in times):
            raise ValueError("pulse times must be strictly positive")
        if any(b < a for a, b in zip(times, times[1:])):
            raise ValueError("pulses must be sorted by ascending time")
        object.__setattr__(self, "pulses", pulses)


def image_source(wall: Wall, point) -> np.ndarray:
    """Mirror image of ``point`` across the wall plane.

    The midpoint of the point and its image lies on the plane, and applying
    the map twice returns the original point.
    """
    p = np.asarray(point, dtype=float)
    return p + 2.0 * wall.signed_distance(p) * wall.normal


def wall_distance(wall: Wall, point) -> float:
    """Signed distance ``offset - <normal, point>``; positive inside the room.

    Equals half the distance between the point and its image source.
    """
    return wall.signed_distance(point)


def toa_of_distance(distance: float, cfg: SimConfig) -> float:
    """Round-trip arrival time ``2 d / c`` of a first-order echo."""
    if distance < 0:
        raise NegativeDistance("distance must be nonnegative")
    return 2.0 * distance / cfg.speed_of_sound


def distance_of_toa(toa: float, cfg: SimConfig) -> float:
    """Wall distance ``c tau / 2`` recovered from an arrival time."""
    if toa < 0:
        raise NegativeDistance("arrival time must be nonnegative")
    return cfg.speed_of_sound * toa / 2.0


def noiseless_matrix(room: Room, trajectory: Trajectory) -> np.ndarray:
    """Exact distance matrix ``-R^T N + 1 q^T`` from the room parameters."""
    normals = room.normal_matrix()
    offsets = room.offsets()
    return offsets[None, :] - trajectory.points @ normals.T


def _noise(shape: tuple[int, int], sigma: float, seed: int) -> np.ndarray:
    """Deterministic Gaussian field: entry (i, j) is the (i*K + j)-th uniform
    of the seeded stream pushed through the inverse normal CDF.

    Using the inverse CDF (rather than a rejection sampler) makes each draw a
    pure function of its stream position, so masking entries afterwards or
    parallelising over trials can never change the values.
    """
    rng = np.random.default_rng(seed)
    u = rng.random(shape)
    tiny = np.finfo(float).tiny
    u = np.clip(u, tiny, 1.0 - np.finfo(float).epsneg)
    return sigma * ndtri(u)


def echo_matrix(room: Room, trajectory: Trajectory, cfg: SimConfig | None = None) -> EchoMatrix:
    """Simulate the N x K echo distance matrix for a trajectory inside a room.

    With ``noise_sigma > 0`` each entry receives an independent Gaussian
    perturbation; draws are reproducible for a fixed ``rng_seed`` and are not
    truncated, so noisy entries may go negative near a wall.

    Raises
    ------
    PointOutsideRoom
        If some trajectory point is not strictly inside the room (the error
        carries the offending index).
    """
    cfg = cfg or SimConfig()
    if trajectory.dimension != room.dimension:
        raise ValueError("trajectory and room dimensions differ")
    clean = noiseless_matrix(room, trajectory)
    inside = clean.min(axis=1)
    bad = np.nonzero(inside <= 0)[0]
    if bad.size:
        raise PointOutsideRoom(int(bad[0]))
    entries = clean
    if cfg.noise_sigma > 0:
        entries = clean + _noise(clean.shape, cfg.noise_sigma, cfg.rng_seed)
    return EchoMatrix.full(entries, room.labels)


def render_rir(room: Room, point, cfg: SimConfig | None = None) -> RirTrace:
    """Idealized impulse response at ``point``: one pulse per first-order echo.

    Amplitudes follow ``cfg.amplitude_model``: ``unit`` gives
    ``1 - absorption`` per wall, ``inverse_distance`` divides additionally by
    the round-trip path length ``2 d``.
    """
    cfg = cfg or SimConfig()
    p = np.asarray(point, dtype=float)
    distances = np.array([wall_distance(w, p) for w in room.walls])
    if distances.min() <= 0:
        raise PointOutsideRoom(0, "receiver point is not strictly inside the room")
    absorption = cfg.absorption_vector(room.num_walls)
    gains = 1.0 - absorption
    if cfg.amplitude_model == "inverse_distance":
        gains = gains / (2.0 * distances)
    pulses = [
        Pulse(toa_of_distance(d, cfg), float(g), lab)
        for d, g, lab in zip(distances, gains, room.labels)
    ]
    pulses.sort(key=lambda pulse: pulse.time)
    return RirTrace(pulses=tuple(pulses))
