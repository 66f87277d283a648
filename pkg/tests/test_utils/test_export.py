"""Tests for CSV and JSON result files."""

import csv
import json
import math
from pathlib import Path

import pytest

from src import __version__
from src.utils.atlas import SweepRecord, SweepSpec, TransitionReport, landmark_times, run_sweep, summarize_transitions
from src.utils.export import (
    SWEEP_COLUMNS,
    TRAJECTORY_COLUMNS,
    TRANSITION_COLUMNS,
    export_landmarks,
    export_sweep,
    export_trajectory,
)
from src.utils.limit_cycle import assemble_global, solve_limit_cycle
from src.utils.working_medium import StateVector, energy_entropy, reconstruct_density


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as f:
        return list(csv.reader(f))


@pytest.fixture
def cycle(reference_params):
    return solve_limit_cycle(assemble_global(reference_params), samples_per_segment=20)


@pytest.fixture
def sweep(reference_params):
    spec = SweepSpec(reference_params, (0.2, 0.5, 0.9), samples_per_segment=10)
    records = run_sweep(spec)
    return spec, records, summarize_transitions(spec, records, [])


class TestTrajectoryExport:
    """Sampled limit cycle on disk."""

    def test_csv(self, cycle, temp_working_dir):
        """One row per sample; floats survive the round trip exactly."""
        path = Path(temp_working_dir) / "cycle.csv"
        message, success = export_trajectory(cycle, str(path))
        assert success, message
        rows = read_csv(path)
        assert rows[0] == TRAJECTORY_COLUMNS
        assert len(rows) == 1 + len(cycle.trajectory)
        s_e = TRAJECTORY_COLUMNS.index("S_E")
        assert [float(r[s_e]) for r in rows[1:]] == [p.s_e for p in cycle.trajectory]

    def test_energy_entropy_rederived_from_columns(self, cycle, temp_working_dir):
        """S_E rebuilt from the stored (E, L, C, D, Omega) matches the stored column."""
        path = Path(temp_working_dir) / "cycle.csv"
        export_trajectory(cycle, str(path))
        col = {name: TRAJECTORY_COLUMNS.index(name) for name in ("E", "L", "C", "D", "Omega", "S_E")}
        for row in read_csv(path)[1:]:
            state = StateVector(*(float(row[col[name]]) for name in ("E", "L", "C", "D")))
            rho = reconstruct_density(state, float(row[col["Omega"]]))
            assert energy_entropy(rho) == pytest.approx(float(row[col["S_E"]]), abs=1e-12)

    def test_dynamical_temperature_only_on_isochores(self, cycle, temp_working_dir):
        """Adiabat rows leave T_dyn empty."""
        path = Path(temp_working_dir) / "cycle.csv"
        export_trajectory(cycle, str(path))
        segment, t_dyn = TRAJECTORY_COLUMNS.index("segment"), TRAJECTORY_COLUMNS.index("T_dyn")
        for row in read_csv(path)[1:]:
            if row[segment] in ("ch", "hc"):
                assert row[t_dyn] == ""
            else:
                assert row[t_dyn] != ""

    def test_json(self, cycle, temp_working_dir):
        """JSON carries metadata and is strict JSON."""
        path = Path(temp_working_dir) / "out" / "cycle.json"
        message, success = export_trajectory(cycle, str(path), fmt="json")
        assert success, message
        payload = json.loads(path.read_text(encoding="utf-8"), parse_constant=pytest.fail)
        assert payload["metadata"]["version"] == __version__
        assert payload["metadata"]["parameters"]["tau_cycle"] == cycle.params.tau_cycle
        assert payload["metadata"]["lambda2"] == cycle.lambda2
        assert payload["columns"] == TRAJECTORY_COLUMNS
        assert len(payload["rows"]) == len(cycle.trajectory)

    def test_unwritable_path(self, cycle, temp_working_dir):
        """A path below a regular file reports failure instead of raising."""
        blocker = Path(temp_working_dir) / "blocker"
        blocker.write_text("x")
        message, success = export_trajectory(cycle, str(blocker / "cycle.csv"))
        assert success is False
        assert "Error writing" in message


class TestSweepExport:
    """Sweep rows and the transition sidecar."""

    def test_csv_with_sidecar(self, sweep, temp_working_dir):
        """Rows follow the grid and the sidecar holds the landmarks."""
        spec, records, report = sweep
        path = Path(temp_working_dir) / "sweep.csv"
        message, success = export_sweep(records, report, str(path))
        assert success, message
        rows = read_csv(path)
        assert rows[0] == SWEEP_COLUMNS
        assert [float(r[0]) for r in rows[1:]] == list(spec.taus)
        side = read_csv(Path(temp_working_dir) / "sweep.transitions.csv")
        assert side[0] == TRANSITION_COLUMNS
        kinds = [r[0] for r in side[1:]]
        assert kinds.count("landmark") == len(spec.landmarks)

    def test_rows_sorted_by_cycle_time(self, sweep, temp_working_dir):
        """Records handed over out of order are written in cycle-time order."""
        _, records, report = sweep
        path = Path(temp_working_dir) / "sweep.csv"
        export_sweep(list(reversed(records)), report, str(path))
        taus = [float(r[0]) for r in read_csv(path)[1:]]
        assert taus == sorted(taus)

    def test_empty_sweep(self, temp_working_dir):
        """No records gives a header-only file."""
        path = Path(temp_working_dir) / "empty.csv"
        message, success = export_sweep([], None, str(path))
        assert success, message
        assert read_csv(path) == [SWEEP_COLUMNS]
        assert read_csv(Path(temp_working_dir) / "empty.transitions.csv") == [TRANSITION_COLUMNS]

    def test_json_matches_csv(self, sweep, temp_working_dir):
        """Both formats carry the same numbers."""
        _, records, report = sweep
        csv_path = Path(temp_working_dir) / "sweep.csv"
        json_path = Path(temp_working_dir) / "sweep.json"
        export_sweep(records, report, str(csv_path))
        export_sweep(records, report, str(json_path), fmt="json", metadata={"grid": "explicit"})
        payload = json.loads(json_path.read_text(encoding="utf-8"))
        assert payload["metadata"]["grid"] == "explicit"
        column = SWEEP_COLUMNS.index("cooling_power")
        from_csv = [float(r[column]) for r in read_csv(csv_path)[1:]]
        from_json = [r[column] for r in payload["records"]]
        assert from_csv == from_json
        assert len(payload["landmarks"]) == len(report.landmarks)

    def test_json_non_finite_values(self, temp_working_dir):
        """Failed rows become null and infinite ratios become strings."""
        failed = SweepRecord(0.5, math.nan, math.nan, math.nan, "error", "error", math.nan, error="boom")
        dephased = SweepRecord(0.6, 1e-4, 1e-5, 0.9, "refrigerator", "indeterminate", -math.inf)
        path = Path(temp_working_dir) / "sweep.json"
        message, success = export_sweep([failed, dephased], TransitionReport(), str(path), fmt="json")
        assert success, message
        records = json.loads(path.read_text(encoding="utf-8"), parse_constant=pytest.fail)["records"]
        assert records[0][SWEEP_COLUMNS.index("cooling_power")] is None
        assert records[0][SWEEP_COLUMNS.index("error")] == "boom"
        assert records[1][SWEEP_COLUMNS.index("energy_coherence_ratio_at_A")] == "-inf"


class TestLandmarkExport:
    """Stand-alone landmark table."""

    def test_csv_and_json(self, reference_params, temp_working_dir):
        """Both formats list every landmark."""
        report = TransitionReport(landmarks=tuple(landmark_times(reference_params, [0.5, 1.0])))
        csv_path = Path(temp_working_dir) / "landmarks.csv"
        json_path = Path(temp_working_dir) / "landmarks.json"
        assert export_landmarks(report, str(csv_path))[1]
        assert export_landmarks(report, str(json_path), fmt="json")[1]
        assert len(read_csv(csv_path)) == 3
        landmarks = json.loads(json_path.read_text(encoding="utf-8"))["landmarks"]
        assert [m["l"] for m in landmarks] == [0.5, 1.0]
