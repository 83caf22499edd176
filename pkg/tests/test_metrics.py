import math

import numpy as np
import pytest

from echoroom import (
    SolverOptions,
    Trajectory,
    align_and_score,
    apply_rigid_motion,
    room_from_vertices,
    room_vertices,
    solve_auto,
)
from echoroom.errors import LabelMismatch
from echoroom.geometry import RigidMotion

from conftest import random_configuration, simulate


class TestAlignAndScore:
    def test_congruent_estimate_scores_zero(self):
        room, traj = random_configuration(70)
        motion = RigidMotion.from_angle(1.1, translation=(0.4, -2.0))
        room2, traj2 = apply_rigid_motion(room, traj, motion)
        report = align_and_score((room, traj), (room2, traj2))
        assert report.vertex_error < 1e-10
        assert report.location_error < 1e-10

    def test_self_score_exactly_zero(self):
        room, traj = random_configuration(71)
        report = align_and_score((room, traj), (room, traj))
        assert report.vertex_error == 0.0
        assert report.location_error == 0.0

    def test_displaced_vertex_rms(self):
        verts = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]
        room = room_from_vertices(verts)
        moved = [(0.0, -0.1), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]
        estimate = room_from_vertices(moved)
        traj = Trajectory([[0.5, 0.5], [0.3, 0.4], [0.7, 0.6]])
        report = align_and_score((room, traj), (estimate, traj))
        # identity alignment is optimal (trajectories coincide); one vertex
        # off by 0.1 gives RMS 0.1 / sqrt(4)
        assert np.allclose(report.aligning_motion.rotation, np.eye(2), atol=1e-9)
        assert report.vertex_error == pytest.approx(0.1 / math.sqrt(4), rel=1e-6)
        assert report.location_error < 1e-12

    def test_invariance_under_rigid_motion_of_estimate(self):
        room, traj = random_configuration(72)
        est_room, est_traj = random_configuration(73, num_walls=room.num_walls, num_points=traj.num_points)
        est_room = room_from_vertices(room_vertices(est_room), labels=room.labels)
        base = align_and_score((room, traj), (est_room, est_traj))
        for angle, t in [(0.5, (1.0, 2.0)), (-1.2, (-3.0, 0.5)), (2.9, (0.0, 0.0))]:
            moved = apply_rigid_motion(est_room, est_traj, RigidMotion.from_angle(angle, translation=t))
            report = align_and_score((room, traj), moved)
            assert report.vertex_error == pytest.approx(base.vertex_error, abs=1e-9)
            assert report.location_error == pytest.approx(base.location_error, abs=1e-9)

    def test_label_mismatch(self):
        room, traj = random_configuration(74, num_walls=4)
        other, _ = random_configuration(75, num_walls=5)
        with pytest.raises(LabelMismatch):
            align_and_score((room, traj), (other, traj))

    def test_gauge_fixed_variant(self):
        room, traj = random_configuration(76)
        moved = apply_rigid_motion(room, traj, RigidMotion.from_angle(0.8, translation=(2.0, 1.0)))
        aligned = align_and_score((room, traj), moved)
        fixed = align_and_score((room, traj), moved, align=False)
        assert aligned.vertex_error < 1e-10
        assert fixed.vertex_error > 0.1  # punishes the motion when unaligned

    def test_raw_sums_exposed(self):
        room, traj = random_configuration(77)
        report = align_and_score((room, traj), (room, traj))
        assert report.vertex_error_sum == 0.0
        assert report.location_error_sum == 0.0

    def test_noiseless_pipeline_end_to_end(self):
        room, traj = random_configuration(78, num_walls=4, num_points=5)
        echo = simulate(room, traj)
        rec = solve_auto(echo, SolverOptions(restarts=8, rng_seed=0))
        report = align_and_score((room, traj), (rec.room, rec.trajectory))
        assert report.vertex_error < 1e-6
        assert report.location_error < 1e-6
