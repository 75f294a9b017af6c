"""
Tests for atomic writes, checkpoints, CSV series, reports and VTK output.
"""
import json

import numpy as np
import pytest

from app.errors import CheckpointError, DeformationError
from app.io.atomic import atomic_path, write_text
from app.io.checkpoint import MAGIC, checkpoint, restore
from app.io.csv_writer import (
    TIME_SERIES_COLUMNS, TimeSeriesWriter, dump_probe_line, dump_rho_table, read_time_series,
)
from app.io.reports import CheckRecord, ConvergenceRecord, ErrorReport, RunReport, write_report
from app.io.vtk_writer import export_vtk, read_vtk, write_snapshot
from app.transport.system import TransportState


class TestAtomic:
    """Write-then-rename."""

    def test_replaces_target(self, tmp_path):
        target = tmp_path / "out" / "note.txt"
        write_text(target, "first")
        write_text(target, "second")
        assert target.read_text(encoding="utf-8") == "second"
        assert [p.name for p in target.parent.iterdir()] == ["note.txt"]

    def test_failure_keeps_old_file(self, tmp_path):
        target = tmp_path / "note.txt"
        write_text(target, "kept")
        with pytest.raises(RuntimeError):
            with atomic_path(target) as tmp:
                tmp.write_text("partial", encoding="utf-8")
                raise RuntimeError("interrupted")
        assert target.read_text(encoding="utf-8") == "kept"
        assert len(list(tmp_path.iterdir())) == 1


class TestCheckpoint:
    """Binary restart files."""

    def _write(self, path):
        arrays = {"theta": np.linspace(0.0, 1.0, 7), "grid": np.arange(6).reshape(2, 3)}
        checkpoint(path, arrays, {"step": 3, "t": 0.15})
        return arrays

    def test_restore(self, tmp_path):
        path = tmp_path / "state.ckpt"
        arrays = self._write(path)
        restored, metadata = restore(path)
        assert metadata == {"step": 3, "t": 0.15}
        assert np.array_equal(restored["theta"], arrays["theta"])
        assert np.array_equal(restored["grid"], arrays["grid"])
        assert path.read_bytes().startswith(MAGIC)

    def test_corrupted_payload(self, tmp_path):
        path = tmp_path / "state.ckpt"
        self._write(path)
        blob = bytearray(path.read_bytes())
        blob[-10] ^= 0xFF
        path.write_bytes(bytes(blob))
        with pytest.raises(CheckpointError) as info:
            restore(path)
        assert "checksum" in info.value.message

    def test_wrong_magic(self, tmp_path):
        path = tmp_path / "state.ckpt"
        path.write_bytes(b"NOTACKPT" + bytes(64))
        with pytest.raises(CheckpointError):
            restore(path)

    def test_unsupported_version(self, tmp_path):
        path = tmp_path / "state.ckpt"
        self._write(path)
        blob = bytearray(path.read_bytes())
        blob[len(MAGIC)] = 9
        path.write_bytes(bytes(blob))
        with pytest.raises(CheckpointError) as info:
            restore(path)
        assert info.value.details["version"] == 9

    def test_missing_file(self, tmp_path):
        with pytest.raises(CheckpointError):
            restore(tmp_path / "absent.ckpt")


class TestTimeSeries:
    """Per-step CSV rows."""

    def test_append_and_flush(self, tmp_path):
        writer = TimeSeriesWriter(tmp_path / "series.csv")
        row = {name: 0.1 * i for i, name in enumerate(TIME_SERIES_COLUMNS)}
        writer.append(row)
        writer.append({**row, "t": 1.0 / 3.0})
        writer.flush()
        frame = read_time_series(tmp_path / "series.csv")
        assert list(frame.columns) == TIME_SERIES_COLUMNS
        assert frame["t"].iloc[1] == 1.0 / 3.0

    def test_missing_column(self, tmp_path):
        writer = TimeSeriesWriter(tmp_path / "series.csv", columns=["t", "T"])
        with pytest.raises(KeyError):
            writer.append({"t": 0.0})

    def test_rho_table_dump(self, tmp_path, rho_table):
        dump_rho_table(rho_table, tmp_path / "rho.csv")
        frame = read_time_series(tmp_path / "rho.csv")
        assert len(frame) == len(rho_table.R_grid) * len(rho_table.r_grid)
        assert {"R", "r"} <= set(frame.columns)

    def test_probe_line(self, tmp_path, deformation, identity_radius):
        dump_probe_line(deformation, 0.0, identity_radius, tmp_path / "probe.csv", n=11)
        frame = read_time_series(tmp_path / "probe.csv")
        assert np.allclose(frame["S_r"], frame["r"])
        assert np.allclose(frame["J"], 1.0)


class TestReports:
    """JSON run reports."""

    def test_passed(self):
        report = RunReport(command="verify", checks=[CheckRecord(name="a", passed=True)])
        assert report.passed
        report.checks.append(CheckRecord(name="b", passed=False))
        assert not report.passed

    def test_failed_study(self):
        study = ConvergenceRecord(study="stokes", h=[1.0], errors={"v": [1.0]}, orders={"v": 1.0},
                                  expected={"v": 3.0}, passed=False)
        assert not RunReport(command="mms", convergence=[study]).passed

    def test_error_from_exception(self, tmp_path):
        error = DeformationError("Jacobian dropped below eta/2", details={"J_min": -0.1})
        report = RunReport(command="run", error=ErrorReport(**error.to_dict()))
        assert not report.passed
        write_report(report, tmp_path / "report.json")
        loaded = json.loads((tmp_path / "report.json").read_text(encoding="utf-8"))
        assert loaded["error"]["error_code"] == "DEFORMATION_DEGENERATE"
        assert loaded["error"]["details"] == {"J_min": -0.1}


class TestVtk:
    """Legacy VTK output through meshio."""

    def test_reference_mesh(self, tmp_path, coarse_mesh):
        path = export_vtk(coarse_mesh, tmp_path / "mesh.vtk")
        mesh = read_vtk(path)
        assert np.allclose(mesh.points, coarse_mesh.vertices)
        assert len(mesh.cells_dict["tetra"]) == coarse_mesh.n_cells
        assert np.array_equal(mesh.cell_data["tag"][0], coarse_mesh.cell_tags)

    def test_snapshot(self, tmp_path, coarse_mesh, deformation, wave):
        state = TransportState(t=0.2, theta_f=np.ones(coarse_mesh.fluid.n_vertices),
                               theta_s=np.zeros(coarse_mesh.solid.n_vertices))
        written = write_snapshot(tmp_path, 3, 0.2, coarse_mesh, deformation, wave, state)
        assert written["fluid"].name == "fluid_0003.vtk"
        solid = read_vtk(written["solid"])
        assert np.allclose(solid.point_data["theta"], 0.0)
        expected = deformation.eval_S(0.2, coarse_mesh.solid.vertices, wave)
        assert np.allclose(solid.points, expected)
