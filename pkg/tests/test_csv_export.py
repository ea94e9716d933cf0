"""Tests for CSV reports."""

import numpy as np
import pytest

from ued_tomography.config.pipeline import PipelineConfig
from ued_tomography.diffraction.forward import DiffractionDataset
from ued_tomography.diffraction.geometry import ScatteringGeometry
from ued_tomography.errors import PersistenceError
from ued_tomography.inversion.lcurve import RegularizationReport
from ued_tomography.persistence.csv_export import (
    HISTORY_COLUMNS,
    LCURVE_COLUMNS,
    PIXEL_COLUMNS,
    read_csv,
    write_cos2,
    write_dataset_csv,
    write_history,
    write_lcurve,
)
from ued_tomography.persistence.manifest import compute_file_hash, new_manifest
from ued_tomography.tomography.iterative import IterationRecord


@pytest.fixture
def manifest():
    return new_manifest("test", PipelineConfig())


class TestHistory:
    def test_rows_and_header(self, tmp_path, manifest):
        """One row per iteration; a missing ε(ρ̂) is written as NaN."""
        history = [
            IterationRecord(iteration=1, error_rho=None, error_pr=0.5, min_eigenvalue=-0.01, hio_converged=False),
            IterationRecord(iteration=2, error_rho=0.1, error_pr=0.25, min_eigenvalue=0.0, hio_converged=True),
        ]
        path = write_history(tmp_path, manifest, history)
        header, rows = read_csv(path)
        assert header == HISTORY_COLUMNS
        assert rows.shape == (2, 5)
        assert np.isnan(rows[0, 1])
        np.testing.assert_array_equal(rows[1], [2.0, 0.1, 0.25, 0.0, 1.0])

    def test_digest_registered(self, tmp_path, manifest):
        record = IterationRecord(iteration=1, error_rho=0.2, error_pr=0.3, min_eigenvalue=0.0, hio_converged=True)
        path = write_history(tmp_path, manifest, [record], name="run")
        assert manifest.files["run.csv"] == compute_file_hash(path)

    def test_full_precision(self, tmp_path, manifest):
        """Values survive the text round trip exactly."""
        value = 1.0 / 3.0
        record = IterationRecord(iteration=1, error_rho=value, error_pr=value, min_eigenvalue=0.0, hio_converged=True)
        _, rows = read_csv(write_history(tmp_path, manifest, [record]))
        assert rows[0, 1] == value


class TestReports:
    def test_lcurve_without_conditions(self, tmp_path, manifest):
        """Condition numbers that were not computed become NaN."""
        grid = np.logspace(-2, 2, 5)
        report = RegularizationReport(
            lambda_grid=grid,
            residual_norms=np.linspace(1.0, 5.0, 5),
            solution_norms=np.linspace(5.0, 1.0, 5),
            curvature=np.array([np.nan, 0.1, 0.3, 0.1, np.nan]),
            condition_numbers=None,
            turning_point_lambda=1.0,
            selected_lambda=1.0,
            admissible_band=None,
        )
        header, rows = read_csv(write_lcurve(tmp_path, manifest, report))
        assert header == LCURVE_COLUMNS
        np.testing.assert_array_equal(rows[:, 0], grid)
        assert np.all(np.isnan(rows[:, 4]))

    def test_cos2(self, tmp_path, manifest):
        times = np.array([0.0, 0.5, 1.0])
        header, rows = read_csv(write_cos2(tmp_path, manifest, times, np.full(3, 1 / 3), np.full(3, 1 / 3)))
        assert header[0] == "time [ps]"
        assert rows.shape == (3, 3)

    def test_read_missing(self, tmp_path):
        with pytest.raises(PersistenceError, match="cannot read"):
            read_csv(tmp_path / "none.csv")


class TestDatasetCsv:
    @pytest.fixture
    def dataset(self):
        detector = ScatteringGeometry.flat_detector(2, 4.0, beam_stop_radius=1.0)
        frames = np.random.default_rng(0).uniform(0.0, 5.0, size=(3, detector.n_pixels))
        return DiffractionDataset(geometry=detector, time_nodes=np.array([0.0, 0.25, 0.5]), frames=frames)

    def test_frames_round_trip(self, tmp_path, manifest, dataset):
        """Times and every pixel value come back exactly under unit headers."""
        frames_path, _ = write_dataset_csv(tmp_path, manifest, dataset)
        header, rows = read_csv(frames_path)
        assert header == ["time [ps]"] + [f"pixel_{i} [intensity]" for i in range(4)]
        np.testing.assert_array_equal(rows[:, 0], dataset.time_nodes)
        np.testing.assert_array_equal(rows[:, 1:], dataset.frames)

    def test_pixel_table(self, tmp_path, manifest, dataset):
        _, pixels_path = write_dataset_csv(tmp_path, manifest, dataset)
        header, rows = read_csv(pixels_path)
        geometry = dataset.geometry
        assert header == PIXEL_COLUMNS
        np.testing.assert_array_equal(rows[:, 1], geometry.scattering_angles)
        np.testing.assert_array_equal(rows[:, 2], geometry.azimuths)
        expected_used = np.ones(4) if geometry.mask is None else geometry.mask.astype(float)
        np.testing.assert_array_equal(rows[:, 3], expected_used)

    def test_digests_registered(self, tmp_path, manifest, dataset):
        frames_path, pixels_path = write_dataset_csv(tmp_path, manifest, dataset)
        assert manifest.files["frames.csv"] == compute_file_hash(frames_path)
        assert manifest.files["pixels.csv"] == compute_file_hash(pixels_path)
