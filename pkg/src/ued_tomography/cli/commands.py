"""Command implementations: run a pipeline and write its artifact directory."""

from __future__ import annotations

from pathlib import Path

import structlog

from ued_tomography.config.pipeline import PipelineConfig
from ued_tomography.config.settings import get_settings
from ued_tomography.errors import ValidationError
from ued_tomography.evaluation.metrics import format_metrics
from ued_tomography.inversion.lcurve import l_curve_scan, lambda_grid
from ued_tomography.persistence.arrays import (
    load_dataset,
    load_distribution,
    load_movie,
    load_rotational_density,
    load_vibrational_density,
    save_dataset,
    save_distribution,
    save_movie,
    save_rotational_density,
    save_vibrational_density,
    write_array,
)
from ued_tomography.persistence.csv_export import (
    DATASET_CSV_MAX_VALUES,
    write_cos2,
    write_dataset_csv,
    write_history,
    write_lcurve,
)
from ued_tomography.persistence.manifest import (
    MANIFEST_NAME,
    RunManifest,
    compute_file_hash,
    config_hash,
    new_manifest,
    verify_manifest,
    write_manifest,
)
from ued_tomography.pipeline import (
    invert_frames,
    kernel_for,
    mean_masked_frame,
    reconstruct_rotational,
    reconstruct_vibrational,
    simulate_rotational,
    simulate_vibrational,
)

logger = structlog.get_logger()


def resolve_output_dir(command: str, config: PipelineConfig, output_dir: Path | None) -> Path:
    """Explicit directory, then the config's, then ``<output_root>/<command>-<hash>``."""
    if output_dir is not None:
        return output_dir
    if config.output_dir is not None:
        return config.output_dir
    return get_settings().output_root / f"{command}-{config_hash(config)[:8]}"


def _input_digests(*directories: Path | None) -> dict[str, str]:
    return {
        str(directory / MANIFEST_NAME): compute_file_hash(directory / MANIFEST_NAME)
        for directory in directories
        if directory is not None
    }


def cmd_simulate(config: PipelineConfig, output_dir: Path) -> RunManifest:
    """Write the ground-truth state and either diffraction frames or a vibrational movie."""
    manifest = new_manifest("simulate", config)
    if config.kind == "vibrational":
        sim = simulate_vibrational(config)
        save_vibrational_density(output_dir, manifest, sim.rho, name="rho_true")
        save_movie(output_dir, manifest, sim.movie)
        write_array(output_dir, manifest, "snapshot", sim.snapshot)
        manifest.metadata["snapshot_time_fs"] = config.vibrational.snapshot_time_fs
    else:
        sim = simulate_rotational(config)
        save_rotational_density(output_dir, manifest, sim.rho, name="rho_true")
        save_dataset(output_dir, manifest, sim.dataset)
        save_distribution(output_dir, manifest, sim.distribution)
        write_cos2(output_dir, manifest, sim.time_nodes, sim.cos2_matrix, sim.cos2_quadrature)
        if sim.dataset.frames.size <= DATASET_CSV_MAX_VALUES:
            write_dataset_csv(output_dir, manifest, sim.dataset)
        else:
            logger.info("dataset_csv_skipped", values=sim.dataset.frames.size, limit=DATASET_CSV_MAX_VALUES)
    write_manifest(output_dir, manifest)
    logger.info("simulate_complete", directory=str(output_dir), kind=config.kind)
    return manifest


def cmd_invert(config: PipelineConfig, dataset_dir: Path, output_dir: Path) -> RunManifest:
    """Tikhonov inversion of every frame; the L-curve CSV is written when the policy scans λ."""
    dataset = load_dataset(dataset_dir, verify_manifest(dataset_dir))
    kernel = kernel_for(config, dataset.geometry)
    result = invert_frames(config, dataset, kernel)

    manifest = new_manifest("invert", config, _input_digests(dataset_dir))
    save_distribution(output_dir, manifest, result.distribution)
    if result.report is not None:
        write_lcurve(output_dir, manifest, result.report)
    manifest.metadata["lambda"] = result.lam
    write_manifest(output_dir, manifest)
    logger.info("invert_complete", directory=str(output_dir), lam=result.lam)
    return manifest


def cmd_lcurve(config: PipelineConfig, dataset_dir: Path, output_dir: Path) -> RunManifest:
    """L-curve and condition-number scan on the time-averaged frame, without inverting."""
    dataset = load_dataset(dataset_dir, verify_manifest(dataset_dir))
    kernel = kernel_for(config, dataset.geometry)
    rows, frame = mean_masked_frame(kernel, dataset)
    reg = config.regularization
    report = l_curve_scan(
        kernel.matrix[rows],
        frame,
        lambda_grid(reg.lambda_min, reg.lambda_max, reg.n_lambda),
        condition_trials=reg.condition_trials,
        cond_max=reg.cond_max,
        condition_noise=reg.condition_noise,
        seed=reg.seed,
    )
    manifest = new_manifest("lcurve", config, _input_digests(dataset_dir))
    write_lcurve(output_dir, manifest, report)
    manifest.metadata["turning_point_lambda"] = report.turning_point_lambda
    manifest.metadata["admissible_band"] = None if report.admissible_band is None else list(report.admissible_band)
    write_manifest(output_dir, manifest)
    print(f"turning point: {report.turning_point_lambda}  admissible band: {report.admissible_band}")
    return manifest


def cmd_qt_rot(
    config: PipelineConfig,
    distribution_dir: Path,
    output_dir: Path,
    reference_dir: Path | None = None,
) -> RunManifest:
    """Rotational tomography; without ``reference_dir`` the run is in experiment mode."""
    measured = load_distribution(distribution_dir, verify_manifest(distribution_dir))
    reference = None
    if reference_dir is not None:
        reference = load_rotational_density(reference_dir, verify_manifest(reference_dir), name="rho_true")
    result = reconstruct_rotational(config, measured, reference)

    manifest = new_manifest("qt-rot", config, _input_digests(distribution_dir, reference_dir))
    save_rotational_density(output_dir, manifest, result.rho)
    write_history(output_dir, manifest, result.history)
    manifest.metadata["stop_reason"] = result.stop_reason
    manifest.metadata["experiment_mode"] = result.experiment_mode
    write_manifest(output_dir, manifest)
    print(format_metrics(result.history, title="Rotational tomography"))
    return manifest


def cmd_qt_vib(
    config: PipelineConfig,
    movie_dir: Path,
    output_dir: Path,
    reference_dir: Path | None = None,
) -> RunManifest:
    movie = load_movie(movie_dir, verify_manifest(movie_dir))
    reference = None
    if reference_dir is not None:
        reference = load_vibrational_density(reference_dir, verify_manifest(reference_dir), name="rho_true")
    result = reconstruct_vibrational(config, movie, reference)

    manifest = new_manifest("qt-vib", config, _input_digests(movie_dir, reference_dir))
    save_vibrational_density(output_dir, manifest, result.rho)
    write_history(output_dir, manifest, result.history)
    manifest.metadata["stop_reason"] = result.stop_reason
    manifest.metadata["experiment_mode"] = result.experiment_mode
    write_manifest(output_dir, manifest)
    print(format_metrics(result.history, title="Vibrational tomography"))
    return manifest


def cmd_validate(path: Path) -> RunManifest:
    """Check digests and config schema of an artifact directory and print a short report."""
    if not path.is_dir():
        raise ValidationError(f"{path} is not an artifact directory")
    manifest = verify_manifest(path)
    sizes = {name: record.shape for name, record in manifest.arrays.items()}
    print(f"{path}: ok ({manifest.command}, config {manifest.config_hash[:12]})")
    for name, shape in sorted(sizes.items()):
        print(f"  {name:<28s} {'x'.join(str(n) for n in shape) or 'scalar'}")
    for name in sorted(manifest.files):
        print(f"  {name}")
    return manifest

