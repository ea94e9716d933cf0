"""Binary array artifacts.

Arrays are written as raw little-endian float64 (``<f8``); complex arrays
are interleaved (re, im) along a trailing axis.  Shapes and digests live in
the run manifest, so the files themselves carry no header and can be read
from any language.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ued_tomography.angular.grid import AngularGrid
from ued_tomography.diffraction.forward import DiffractionDataset
from ued_tomography.diffraction.geometry import ScatteringGeometry
from ued_tomography.errors import PersistenceError, ValidationError
from ued_tomography.persistence.manifest import ArrayRecord, RunManifest, compute_file_hash
from ued_tomography.rotor.density import RotationalDensityMatrix
from ued_tomography.rotor.synthesis import AngularDistribution
from ued_tomography.vibrational.blockwise import VibrationalDensityMatrix, VibrationalMovie
from ued_tomography.vibrational.oscillator import OscillatorBasis

DTYPE = "<f8"


def write_array(directory: Path, manifest: RunManifest, name: str, array: np.ndarray) -> ArrayRecord:
    """Write ``array`` to ``<name>.bin`` and register it in ``manifest``."""
    array = np.asarray(array)
    is_complex = np.iscomplexobj(array)
    data = np.stack([array.real, array.imag], axis=-1) if is_complex else array
    path = directory / f"{name}.bin"
    try:
        directory.mkdir(parents=True, exist_ok=True)
        np.ascontiguousarray(data, dtype=DTYPE).tofile(path)
    except OSError as e:
        raise PersistenceError(f"cannot write {path}: {e}") from e
    record = ArrayRecord(file=path.name, shape=list(array.shape), complex=is_complex, sha256=compute_file_hash(path))
    manifest.arrays[name] = record
    return record


def read_array(directory: Path, manifest: RunManifest, name: str) -> np.ndarray:
    """Read a registered array, checking its size against the recorded shape."""
    if name not in manifest.arrays:
        raise ValidationError(f"array {name!r} not in manifest of {directory}")
    record = manifest.arrays[name]
    path = directory / record.file
    try:
        flat = np.fromfile(path, dtype=DTYPE)
    except OSError as e:
        raise PersistenceError(f"cannot read {path}: {e}") from e
    shape = tuple(record.shape) + ((2,) if record.complex else ())
    if flat.size != int(np.prod(shape)):
        raise ValidationError(f"{record.file} holds {flat.size} values, expected shape {shape}")
    data = flat.reshape(shape)
    return data[..., 0] + 1j * data[..., 1] if record.complex else data


# ----------------------------------------------------------------------
# Diffraction datasets and angular distributions
# ----------------------------------------------------------------------


def save_dataset(directory: Path, manifest: RunManifest, dataset: DiffractionDataset) -> None:
    geometry = dataset.geometry
    write_array(directory, manifest, "scattering_angles", geometry.scattering_angles)
    write_array(directory, manifest, "azimuths", geometry.azimuths)
    mask = np.ones(geometry.n_pixels) if geometry.mask is None else geometry.mask.astype(float)
    write_array(directory, manifest, "mask", mask)
    write_array(directory, manifest, "time_nodes", dataset.time_nodes)
    write_array(directory, manifest, "frames", dataset.frames)
    manifest.metadata["dataset"] = {
        "probe": geometry.probe,
        "probe_energy_kev": geometry.probe_energy_kev,
        "detector_shape": list(geometry.shape) if geometry.shape is not None else None,
        "photon_budget": dataset.photon_budget,
        "seed": dataset.seed,
        "counts_per_unit": dataset.counts_per_unit,
        "time_unit": "ps",
    }


def load_dataset(directory: Path, manifest: RunManifest) -> DiffractionDataset:
    meta = manifest.metadata.get("dataset")
    if meta is None:
        raise ValidationError(f"{directory} does not contain a diffraction dataset")
    mask = read_array(directory, manifest, "mask").astype(bool)
    geometry = ScatteringGeometry(
        scattering_angles=read_array(directory, manifest, "scattering_angles"),
        azimuths=read_array(directory, manifest, "azimuths"),
        probe=meta["probe"],
        probe_energy_kev=meta["probe_energy_kev"],
        mask=None if mask.all() else mask,
        shape=tuple(meta["detector_shape"]) if meta["detector_shape"] is not None else None,
    )
    return DiffractionDataset(
        geometry=geometry,
        time_nodes=read_array(directory, manifest, "time_nodes"),
        frames=read_array(directory, manifest, "frames"),
        photon_budget=meta["photon_budget"],
        seed=meta["seed"],
        counts_per_unit=meta["counts_per_unit"],
    )


def save_distribution(directory: Path, manifest: RunManifest, distribution: AngularDistribution) -> None:
    grid = distribution.grid
    write_array(directory, manifest, "theta_nodes", grid.theta_nodes)
    write_array(directory, manifest, "phi_nodes", grid.phi_nodes)
    write_array(directory, manifest, "weights_theta", grid.weights_theta)
    write_array(directory, manifest, "weights_phi", grid.weights_phi)
    write_array(directory, manifest, "distribution_time_nodes", distribution.time_nodes)
    write_array(directory, manifest, "distribution", distribution.values)
    manifest.metadata["distribution"] = {"quadrature": grid.quadrature, "unit": "1/sr", "time_unit": "ps"}


def load_distribution(directory: Path, manifest: RunManifest) -> AngularDistribution:
    meta = manifest.metadata.get("distribution")
    if meta is None:
        raise ValidationError(f"{directory} does not contain an angular distribution")
    grid = AngularGrid(
        theta_nodes=read_array(directory, manifest, "theta_nodes"),
        phi_nodes=read_array(directory, manifest, "phi_nodes"),
        weights_theta=read_array(directory, manifest, "weights_theta"),
        weights_phi=read_array(directory, manifest, "weights_phi"),
        quadrature=meta["quadrature"],
    )
    return AngularDistribution(
        grid=grid,
        time_nodes=read_array(directory, manifest, "distribution_time_nodes"),
        values=read_array(directory, manifest, "distribution"),
    )


# ----------------------------------------------------------------------
# Density matrices
# ----------------------------------------------------------------------


def save_rotational_density(
    directory: Path, manifest: RunManifest, rho: RotationalDensityMatrix, name: str = "rho"
) -> None:
    """Blocks concatenated in key order; ``<name>_index`` rows are (m1, m2, rows, cols)."""
    keys = rho.keys
    index = np.array([(m1, m2, *rho.blocks[(m1, m2)].shape) for m1, m2 in keys], dtype=float).reshape(-1, 4)
    values = np.concatenate([rho.blocks[key].ravel() for key in keys]) if keys else np.zeros(0, dtype=complex)
    write_array(directory, manifest, f"{name}_index", index)
    write_array(directory, manifest, f"{name}_values", values.astype(complex))
    manifest.metadata[name] = {
        "kind": "rotational",
        "j_max": rho.j_max,
        "reference_time_ps": rho.reference_time,
        "rotational_constant_rad_ps": rho.rotational_constant,
        "centrifugal_distortion_rad_ps": rho.centrifugal_distortion,
    }


def load_rotational_density(directory: Path, manifest: RunManifest, name: str = "rho") -> RotationalDensityMatrix:
    meta = manifest.metadata.get(name)
    if meta is None or meta.get("kind") != "rotational":
        raise ValidationError(f"{directory} does not contain a rotational density matrix {name!r}")
    index = read_array(directory, manifest, f"{name}_index").astype(int)
    values = read_array(directory, manifest, f"{name}_values")
    blocks = {}
    offset = 0
    for m1, m2, rows, cols in index:
        blocks[(int(m1), int(m2))] = values[offset : offset + rows * cols].reshape(rows, cols)
        offset += rows * cols
    if offset != values.size:
        raise ValidationError(f"{name} index table does not cover {values.size} stored values")
    return RotationalDensityMatrix(
        j_max=meta["j_max"],
        blocks=blocks,
        reference_time=meta["reference_time_ps"],
        rotational_constant=meta["rotational_constant_rad_ps"],
        centrifugal_distortion=meta["centrifugal_distortion_rad_ps"],
    )


def _basis_metadata(basis: OscillatorBasis) -> dict[str, object]:
    return {
        "mode_ratios": list(basis.mode_ratios),
        "base_frequency_rad_fs": basis.base_frequency,
        "reduced_masses_amu": list(basis.reduced_masses),
        "n_max": basis.n_max,
        "x_step": basis.x_step,
        "x_margin": basis.x_margin,
    }


def _basis_from_metadata(meta: dict[str, object]) -> OscillatorBasis:
    return OscillatorBasis(
        mode_ratios=tuple(meta["mode_ratios"]),
        base_frequency=meta["base_frequency_rad_fs"],
        reduced_masses=tuple(meta["reduced_masses_amu"]),
        n_max=meta["n_max"],
        x_step=meta["x_step"],
        x_margin=meta["x_margin"],
    )


def save_vibrational_density(
    directory: Path, manifest: RunManifest, rho: VibrationalDensityMatrix, name: str = "rho"
) -> None:
    write_array(directory, manifest, f"{name}_values", rho.matrix.astype(complex))
    manifest.metadata[name] = {"kind": "vibrational", "reference_time_fs": rho.reference_time} | _basis_metadata(
        rho.basis
    )


def load_vibrational_density(directory: Path, manifest: RunManifest, name: str = "rho") -> VibrationalDensityMatrix:
    meta = manifest.metadata.get(name)
    if meta is None or meta.get("kind") != "vibrational":
        raise ValidationError(f"{directory} does not contain a vibrational density matrix {name!r}")
    return VibrationalDensityMatrix(
        basis=_basis_from_metadata(meta),
        matrix=read_array(directory, manifest, f"{name}_values"),
        reference_time=meta["reference_time_fs"],
    )


def save_movie(directory: Path, manifest: RunManifest, movie: VibrationalMovie) -> None:
    write_array(directory, manifest, "movie_time_nodes", movie.time_nodes)
    write_array(directory, manifest, "movie", movie.values)
    manifest.metadata["movie"] = {"time_unit": "fs", "coordinate": "oscillator units"} | _basis_metadata(movie.basis)


def load_movie(directory: Path, manifest: RunManifest) -> VibrationalMovie:
    meta = manifest.metadata.get("movie")
    if meta is None:
        raise ValidationError(f"{directory} does not contain a vibrational movie")
    return VibrationalMovie(
        basis=_basis_from_metadata(meta),
        time_nodes=read_array(directory, manifest, "movie_time_nodes"),
        values=read_array(directory, manifest, "movie"),
    )
