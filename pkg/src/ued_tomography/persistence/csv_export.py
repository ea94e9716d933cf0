"""CSV reports with unit-annotated headers, written through ``numpy.savetxt``."""

from __future__ import annotations

from pathlib import Path
from typing import Any

import numpy as np

from ued_tomography.diffraction.forward import DiffractionDataset
from ued_tomography.errors import PersistenceError
from ued_tomography.inversion.lcurve import RegularizationReport
from ued_tomography.persistence.manifest import RunManifest, compute_file_hash

HISTORY_COLUMNS = ["iteration [1]", "error_rho [1]", "error_pr [1]", "min_eigenvalue [1]", "hio_converged [bool]"]
LCURVE_COLUMNS = [
    "lambda [1]",
    "residual_norm_sq [intensity^2]",
    "solution_norm_sq [sr^-2]",
    "curvature [1]",
    "condition_number [1]",
]
PIXEL_COLUMNS = ["pixel [1]", "scattering_angle [rad]", "azimuth [rad]", "used [bool]"]
DATASET_CSV_MAX_VALUES = 65536


def write_csv(directory: Path, manifest: RunManifest, name: str, columns: list[str], rows: np.ndarray) -> Path:
    """Write ``rows`` under a one-line header and register the digest."""
    path = directory / f"{name}.csv"
    try:
        directory.mkdir(parents=True, exist_ok=True)
        data = np.asarray(rows, dtype=float)
        np.savetxt(path, data, delimiter=",", header=",".join(columns), comments="", fmt="%.17g")
    except OSError as e:
        raise PersistenceError(f"cannot write {path}: {e}") from e
    manifest.files[path.name] = compute_file_hash(path)
    return path


def read_csv(path: Path) -> tuple[list[str], np.ndarray]:
    try:
        header = path.read_text(encoding="utf-8").splitlines()[0].split(",")
        rows = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except (OSError, IndexError) as e:
        raise PersistenceError(f"cannot read {path}: {e}") from e
    return header, rows


def write_history(directory: Path, manifest: RunManifest, history: list[Any], name: str = "convergence") -> Path:
    """One row per iteration; ε(ρ̂) is NaN when no density error was computed."""
    rows = np.array(
        [
            [
                r.iteration,
                np.nan if r.error_rho is None else r.error_rho,
                r.error_pr,
                r.min_eigenvalue,
                float(r.hio_converged),
            ]
            for r in history
        ]
    ).reshape(-1, len(HISTORY_COLUMNS))
    return write_csv(directory, manifest, name, HISTORY_COLUMNS, rows)


def write_lcurve(directory: Path, manifest: RunManifest, report: RegularizationReport) -> Path:
    conditions = report.condition_numbers
    if conditions is None:
        conditions = np.full(report.lambda_grid.size, np.nan)
    rows = np.column_stack(
        [report.lambda_grid, report.residual_norms, report.solution_norms, report.curvature, conditions]
    )
    return write_csv(directory, manifest, "lcurve", LCURVE_COLUMNS, rows)


def write_cos2(
    directory: Path,
    manifest: RunManifest,
    time_nodes: np.ndarray,
    from_matrix: np.ndarray,
    from_quadrature: np.ndarray,
) -> Path:
    rows = np.column_stack([time_nodes, from_matrix, from_quadrature])
    return write_csv(directory, manifest, "cos2", ["time [ps]", "cos2_matrix [1]", "cos2_quadrature [1]"], rows)


def write_dataset_csv(directory: Path, manifest: RunManifest, dataset: DiffractionDataset) -> tuple[Path, Path]:
    """Frames as one row per time node, plus the pixel angles they are sampled at."""
    geometry = dataset.geometry
    used = np.ones(geometry.n_pixels) if geometry.mask is None else geometry.mask.astype(float)
    pixels = np.column_stack([np.arange(geometry.n_pixels), geometry.scattering_angles, geometry.azimuths, used])
    columns = ["time [ps]"] + [f"pixel_{i} [intensity]" for i in range(geometry.n_pixels)]
    frames = np.column_stack([dataset.time_nodes, dataset.frames])
    return (
        write_csv(directory, manifest, "frames", columns, frames),
        write_csv(directory, manifest, "pixels", PIXEL_COLUMNS, pixels),
    )
