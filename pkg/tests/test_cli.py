import json

import numpy as np
import pytest

from echoroom import Trajectory, room_from_vertices
from echoroom.cli import main
from echoroom.io import (
    geometry_to_dict,
    load_echo_csv,
    load_geometry,
    room_from_dict,
    save_echo_csv,
    save_geometry,
    trajectory_from_dict,
)

from conftest import random_configuration, simulate


@pytest.fixture
def quad_files(tmp_path):
    room, traj = random_configuration(90, num_walls=4, num_points=5)
    room_path = tmp_path / "room.json"
    traj_path = tmp_path / "traj.json"
    save_geometry(room_path, room)
    save_geometry(traj_path, trajectory=traj)
    return room, traj, str(room_path), str(traj_path)


class TestGeometryJson:
    def test_round_trip(self, tmp_path):
        room, traj = random_configuration(91)
        path = tmp_path / "geom.json"
        save_geometry(path, room, traj)
        data = load_geometry(path)
        room2 = room_from_dict(data)
        traj2 = trajectory_from_dict(data)
        assert np.allclose(room2.normal_matrix(), room.normal_matrix(), atol=1e-15)
        assert np.allclose(room2.offsets(), room.offsets(), atol=1e-15)
        assert room2.labels == room.labels
        assert np.allclose(traj2.points, traj.points, atol=1e-15)

    def test_vertices_form(self):
        room = room_from_dict({"vertices": [[0, 0], [1, 0], [1, 1], [0, 1]]})
        assert room.num_walls == 4

    def test_dict_contains_schema_fields(self):
        room, traj = random_configuration(92)
        data = geometry_to_dict(room, traj)
        assert set(data) == {"dimension", "walls", "labels", "trajectory"}
        assert data["dimension"] == 2
        assert all(set(w) == {"normal", "offset"} for w in data["walls"])


class TestSimulateCommand:
    def test_deterministic_output(self, tmp_path, quad_files):
        _, _, room_path, traj_path = quad_files
        out1 = tmp_path / "a.csv"
        out2 = tmp_path / "b.csv"
        args = ["simulate", "--room", room_path, "--traj", traj_path, "--sigma", "0.05", "--seed", "1"]
        assert main(args + ["--out", str(out1)]) == 0
        assert main(args + ["--out", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_point_outside_room_exit_2(self, tmp_path, capsys):
        room = room_from_vertices([(0, 0), (1, 0), (1, 1), (0, 1)])
        room_path = tmp_path / "room.json"
        traj_path = tmp_path / "traj.json"
        save_geometry(room_path, room)
        save_geometry(traj_path, trajectory=Trajectory([[0.5, 0.5], [2.0, 0.5]]))
        code = main(
            ["simulate", "--room", str(room_path), "--traj", str(traj_path), "--out", str(tmp_path / "o.csv")]
        )
        assert code == 2
        assert "1" in capsys.readouterr().err

    def test_generator_specs(self, tmp_path):
        out = tmp_path / "gen.csv"
        code = main(
            ["simulate", "--room", "random-convex 5 3", "--traj", "random-interior 6 4", "--out", str(out)]
        )
        assert code == 0
        echo, meta = load_echo_csv(out)
        assert echo.entries.shape == (6, 5)
        assert meta["noise_sigma"] == 0.0


class TestSolveCommand:
    def test_algebraic_noiseless(self, tmp_path, quad_files, capsys):
        room, traj, room_path, traj_path = quad_files
        csv_path = tmp_path / "echo.csv"
        assert main(["simulate", "--room", room_path, "--traj", traj_path, "--out", str(csv_path)]) == 0
        out_json = tmp_path / "rec.json"
        code = main(["solve", "--echo", str(csv_path), "--mode", "algebraic", "--out", str(out_json)])
        assert code == 0
        rec = json.loads(out_json.read_text())
        assert rec["max_abs_residual"] < 1e-9
        assert rec["diagnostics"]["method"] == "algebraic"

    def test_auto_noisy_converges(self, tmp_path, quad_files):
        _, _, room_path, traj_path = quad_files
        csv_path = tmp_path / "echo.csv"
        main(["simulate", "--room", room_path, "--traj", traj_path, "--sigma", "0.05", "--seed", "2", "--out", str(csv_path)])
        out_json = tmp_path / "rec.json"
        code = main(["solve", "--echo", str(csv_path), "--mode", "auto", "--restarts", "12", "--out", str(out_json)])
        assert code == 0
        rec = json.loads(out_json.read_text())
        assert rec["diagnostics"]["converged"] is True

    def test_masked_csv_triggers_completion(self, tmp_path):
        room, traj = random_configuration(93, num_walls=5, num_points=10)
        echo = simulate(room, traj)
        mask = np.random.default_rng(0).random(echo.entries.shape) > 0.15
        mask[:, 0] = True
        mask[0, :] = True
        while min(mask.sum(axis=1).min(), mask.sum(axis=0).min()) < 3:
            mask |= np.random.default_rng(1).random(echo.entries.shape) > 0.5
        csv_path = tmp_path / "masked.csv"
        save_echo_csv(csv_path, echo.with_mask(mask))
        out_json = tmp_path / "rec.json"
        code = main(["solve", "--echo", str(csv_path), "--mode", "algebraic", "--out", str(out_json)])
        assert code == 0
        rec = json.loads(out_json.read_text())
        assert any("completed" in note for note in rec["diagnostics"]["notes"])

    def test_ambiguous_square_exit_4(self, tmp_path):
        room = room_from_vertices([(0, 0), (1, 0), (1, 1), (0, 1)])
        room_path = tmp_path / "room.json"
        save_geometry(room_path, room, Trajectory([[0.2, 0.3], [0.7, 0.4], [0.5, 0.8]]))
        csv_path = tmp_path / "echo.csv"
        main(["simulate", "--room", str(room_path), "--out", str(csv_path)])
        out_json = tmp_path / "rec.json"
        code = main(["solve", "--echo", str(csv_path), "--mode", "algebraic", "--out", str(out_json)])
        assert code == 4
        assert json.loads(out_json.read_text())["error"] == "AmbiguousConfiguration"

    def test_stress_mode_flags_suspected_ambiguity(self, tmp_path):
        room = room_from_vertices([(0, 0), (1, 0), (1, 1), (0, 1)])
        room_path = tmp_path / "room.json"
        save_geometry(room_path, room, Trajectory([[0.2, 0.3], [0.7, 0.4], [0.5, 0.8], [0.4, 0.6]]))
        csv_path = tmp_path / "echo.csv"
        main(["simulate", "--room", str(room_path), "--out", str(csv_path)])
        out_json = tmp_path / "rec.json"
        code = main(["solve", "--echo", str(csv_path), "--mode", "stress", "--restarts", "40", "--out", str(out_json)])
        assert code == 4
        rec = json.loads(out_json.read_text())
        assert any("ambiguity suspected" in n for n in rec["diagnostics"]["notes"])


class TestSweepCommand:
    def test_rows_and_aggregate(self, tmp_path):
        out = tmp_path / "sweep.csv"
        code = main(
            [
                "sweep",
                "--sigma-start", "0", "--sigma-end", "0.02", "--sigma-step", "0.01",
                "--trials", "3", "--restarts", "4", "--seed", "5",
                "--workers", "1", "--out", str(out),
            ]
        )
        assert code == 0
        lines = [l for l in out.read_text().splitlines() if not l.startswith("#")]
        assert len(lines) == 1 + 3 * 3  # header + 3 sigmas x 3 trials
        agg = (tmp_path / "sweep.agg.csv").read_text().splitlines()
        data_rows = [l for l in agg if not l.startswith("#")]
        assert len(data_rows) == 1 + 3
        assert data_rows[1].split(",")[1] == "inf"  # snr at sigma = 0

    def test_worker_count_does_not_change_bytes(self, tmp_path):
        outputs = []
        for workers, name in [(1, "w1"), (2, "w2"), (4, "w4")]:
            out = tmp_path / f"{name}.csv"
            code = main(
                [
                    "sweep",
                    "--sigma-start", "0", "--sigma-end", "0.02", "--sigma-step", "0.01",
                    "--trials", "4", "--restarts", "4", "--seed", "9",
                    "--workers", str(workers), "--out", str(out),
                ]
            )
            assert code == 0
            outputs.append((out.read_bytes(), (tmp_path / f"{name}.agg.csv").read_bytes()))
        assert outputs[0] == outputs[1] == outputs[2]


class TestAmbiguityCommand:
    def test_parallelogram_bundle(self, tmp_path, capsys):
        prefix = tmp_path / "pair"
        code = main(["ambiguity", "--family", "parallelogram", "--alpha", "75", "--beta", "10", "--seed", "2", "--out", str(prefix)])
        assert code == 0
        bundle = json.loads((tmp_path / "pair.json").read_text())
        assert bundle["verdict"] == "distinct"
        assert bundle["max_deviation"] < 1e-12
        echo, _ = load_echo_csv(tmp_path / "pair_echo.csv")
        geo_a = load_geometry(tmp_path / "pair_a.json")
        geo_b = load_geometry(tmp_path / "pair_b.json")
        assert echo.num_walls == 4
        assert geo_a["labels"] == geo_b["labels"]
        assert "distinct" in capsys.readouterr().out

    def test_identity_angles_congruent(self, tmp_path):
        prefix = tmp_path / "pair"
        code = main(["ambiguity", "--family", "parallelogram", "--alpha", "90", "--beta", "0", "--seed", "2", "--out", str(prefix)])
        assert code == 0
        assert json.loads((tmp_path / "pair.json").read_text())["verdict"] == "congruent"

    def test_collinear_asymmetric_distinct(self, tmp_path):
        room_path = tmp_path / "tri.json"
        save_geometry(room_path, room_from_vertices([(0, 0), (1, 0), (0.3, 0.9)]))
        prefix = tmp_path / "pair"
        code = main(
            [
                "ambiguity", "--family", "collinear", "--room", str(room_path),
                "--line-point", "0.35,0.3", "--line-angle", "0", "--offsets=-0.15,0,0.2",
                "--out", str(prefix),
            ]
        )
        assert code == 0
        bundle = json.loads((tmp_path / "pair.json").read_text())
        assert bundle["verdict"] == "distinct"
        assert bundle["max_deviation"] < 1e-12


class TestCompleteAndRankCommands:
    def test_complete_then_rank(self, tmp_path, capsys):
        room, traj = random_configuration(94, num_walls=5, num_points=10)
        echo = simulate(room, traj)
        rng = np.random.default_rng(2)
        while True:
            mask = rng.random(echo.entries.shape) > 0.2
            if mask.sum(axis=1).min() >= 3 and mask.sum(axis=0).min() >= 3:
                break
        masked_path = tmp_path / "masked.csv"
        save_echo_csv(masked_path, echo.with_mask(mask))

        completed_path = tmp_path / "completed.csv"
        assert main(["complete", "--echo", str(masked_path), "--out", str(completed_path)]) == 0
        completed, _ = load_echo_csv(completed_path)
        assert completed.is_complete
        assert np.max(np.abs(completed.entries - echo.entries)) < 1e-8

        capsys.readouterr()  # drop the completion summary line
        assert main(["rank", "--echo", str(completed_path)]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["numerical_rank"] == 3
        assert report["gap_ratio"] < 1e-8

    def test_rank_masked_exit_2(self, tmp_path):
        room, traj = random_configuration(95, num_walls=4, num_points=5)
        echo = simulate(room, traj)
        mask = np.ones(echo.entries.shape, bool)
        mask[1, 2] = False
        path = tmp_path / "m.csv"
        save_echo_csv(path, echo.with_mask(mask))
        assert main(["rank", "--echo", str(path)]) == 2


class TestWorkerCap:
    def test_env_var_caps_workers(self, monkeypatch):
        from echoroom.sweep import resolve_workers

        monkeypatch.setenv("ECHOROOM_THREADS", "2")
        assert resolve_workers(8) == 2
        assert resolve_workers(1) == 1
        monkeypatch.delenv("ECHOROOM_THREADS")
        assert resolve_workers(8) == 8
