import numpy as np
import pytest

from echoroom import SimConfig, echo_matrix
from echoroom.generators import random_convex_room, random_interior_trajectory


@pytest.fixture
def unit_square():
    from echoroom import room_from_vertices

    return room_from_vertices([(0, 0), (1, 0), (1, 1), (0, 1)])


def random_configuration(seed, num_walls=None, num_points=None):
    """Deterministic random room + interior trajectory, generic by construction."""
    rng = np.random.default_rng(seed)
    k = num_walls or int(rng.integers(3, 7))
    n = num_points or int(rng.integers(3, 9))
    room = random_convex_room(k, int(rng.integers(0, 2**31)))
    traj = random_interior_trajectory(room, n, int(rng.integers(0, 2**31)))
    return room, traj


def simulate(room, traj, sigma=0.0, seed=0):
    return echo_matrix(room, traj, SimConfig(noise_sigma=sigma, rng_seed=seed))


def finite_difference_gradient(params, problem, step=1e-6):
    """Central-difference gradient over the free coordinates; the independent
    oracle for the analytic gradient, in its packing order."""
    from echoroom import stress_cost

    def cost_with(kind, idx, delta):
        p = params.copy()
        if kind == "theta":
            p.thetas[idx] += delta
        elif kind == "q":
            p.offsets[idx] += delta
        elif kind == "x":
            p.xs[idx] += delta
        else:
            p.ys[idx] += delta
        return stress_cost(p, problem)

    coords = (
        [("theta", j) for j in range(1, params.num_walls)]
        + [("q", j) for j in range(params.num_walls)]
        + [("x", i) for i in range(1, params.num_points)]
        + [("y", i) for i in range(1, params.num_points)]
    )
    return np.array([(cost_with(k, i, step) - cost_with(k, i, -step)) / (2 * step) for k, i in coords])
