"""Pure pipelines: configuration in, numerical results out.

Nothing here touches the filesystem.  The CLI wraps these functions with
artifact I/O and the evaluation harness calls them directly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import structlog

from ued_tomography.angular.grid import AngularGrid, make_grid
from ued_tomography.config.pipeline import PipelineConfig
from ued_tomography.config.settings import get_settings
from ued_tomography.diffraction.forward import DiffractionDataset, simulate_dataset
from ued_tomography.diffraction.geometry import MoleculeGeometry, ScatteringGeometry
from ued_tomography.diffraction.kernel import KernelMatrix, build_kernel
from ued_tomography.errors import ValidationError
from ued_tomography.inversion.lcurve import RegularizationReport, select_lambda
from ued_tomography.inversion.tikhonov import invert_dataset
from ued_tomography.rotor.alignment import LaserPulse, cos2_expectation, density_from_pendular, propagate_alignment
from ued_tomography.rotor.density import RotationalDensityMatrix
from ued_tomography.rotor.model import RotorSpec
from ued_tomography.rotor.synthesis import AngularDistribution, cos2_from_distribution
from ued_tomography.tomography.blockwise import period_time_nodes
from ued_tomography.tomography.constraints import thermal_partial_traces
from ued_tomography.tomography.iterative import QTResult, initial_guess, qt_iterate, random_trial_state
from ued_tomography.tomography.resolution import required_time_samples
from ued_tomography.vibrational.blockwise import (
    VibrationalDensityMatrix,
    VibrationalMovie,
    movie_from_blockwise,
    simulate_movie,
    synthesize_vib_blockwise,
)
from ued_tomography.vibrational.blockwise import period_time_nodes as vib_period_time_nodes
from ued_tomography.vibrational.iterative import (
    VibConstraintSet,
    VibQTResult,
    iterative_vib_qt,
    random_vib_density,
    vib_initial_guess,
)
from ued_tomography.vibrational.momentum import MomentumConstraint
from ued_tomography.vibrational.oscillator import OscillatorBasis, PatternFunctionTable, build_pattern_table

logger = structlog.get_logger()

RANDOM_TRIAL_J_MAX = 4


@dataclass
class RotationalSimulation:
    """Ground truth and simulated frames of one rotational run."""

    spec: RotorSpec
    rho: RotationalDensityMatrix
    time_nodes: np.ndarray
    distribution: AngularDistribution
    kernel: KernelMatrix
    dataset: DiffractionDataset
    cos2_matrix: np.ndarray
    cos2_quadrature: np.ndarray


@dataclass
class InversionResult:
    distribution: AngularDistribution
    lam: float
    report: RegularizationReport | None


@dataclass
class VibrationalSimulation:
    basis: OscillatorBasis
    table: PatternFunctionTable
    rho: VibrationalDensityMatrix
    movie: VibrationalMovie
    snapshot: np.ndarray


def orientation_grid(config: PipelineConfig) -> AngularGrid:
    return make_grid(config.grids.n_theta, config.grids.n_phi, config.grids.quadrature)


def molecule_and_detector(config: PipelineConfig) -> tuple[MoleculeGeometry, ScatteringGeometry]:
    molecule = MoleculeGeometry.from_config(config.molecule, get_settings().form_factor_table)
    return molecule, ScatteringGeometry.from_config(config.detector)


def kernel_for(config: PipelineConfig, geometry: ScatteringGeometry | None = None) -> KernelMatrix:
    """K for the configured molecule and grid on ``geometry`` (the configured detector by default)."""
    molecule, detector = molecule_and_detector(config)
    return build_kernel(
        molecule,
        detector if geometry is None else geometry,
        orientation_grid(config),
        memory_cap_mb=config.detector.kernel_memory_cap_mb,
        row_block_size=config.detector.row_block_size,
        max_workers=config.detector.max_workers,
    )


def initial_rotational_state(config: PipelineConfig, spec: RotorSpec) -> RotationalDensityMatrix:
    """Post-pulse aligned ensemble, or the five-block random trial state at t = 0."""
    if config.rotor.initial_state == "random_trial":
        if config.rotor.j_max != RANDOM_TRIAL_J_MAX:
            raise ValidationError(f"random trial state needs j_max={RANDOM_TRIAL_J_MAX}, got {config.rotor.j_max}")
        return random_trial_state(spec.rotational_constant)
    pulse = LaserPulse.from_config(config.pulse)
    coefficients = propagate_alignment(
        spec,
        pulse,
        config.rotor.j_max,
        rtol=config.pulse.rtol,
        atol=config.pulse.atol,
        norm_tolerance=config.pulse.norm_tolerance,
        max_workers=config.pulse.max_workers,
    )
    start = pulse.support()[1] if config.grids.start_time_ps is None else config.grids.start_time_ps
    return density_from_pendular(
        coefficients, spec, start, config.rotor.thermal_tail_tolerance, config.rotor.top_shell_tolerance
    )


def rotational_time_nodes(config: PipelineConfig, spec: RotorSpec, start: float) -> np.ndarray:
    n_time = config.grids.n_time or required_time_samples(config.rotor.j_max)
    return period_time_nodes(spec.rotational_constant, n_time, start)


def simulate_rotational(config: PipelineConfig) -> RotationalSimulation:
    spec = RotorSpec.from_config(config.rotor)
    rho = initial_rotational_state(config, spec)
    time_nodes = rotational_time_nodes(config, spec, rho.reference_time)
    molecule, geometry = molecule_and_detector(config)
    grid = orientation_grid(config)
    kernel = kernel_for(config, geometry)
    dataset, distribution = simulate_dataset(
        rho,
        molecule,
        geometry,
        grid,
        time_nodes,
        noise_budget=config.noise.photon_budget,
        seed=config.noise.seed,
        kernel=kernel,
    )
    logger.info("rotational_simulated", frames=dataset.n_frames, pixels=geometry.n_pixels, j_max=rho.j_max)
    return RotationalSimulation(
        spec=spec,
        rho=rho,
        time_nodes=time_nodes,
        distribution=distribution,
        kernel=kernel,
        dataset=dataset,
        cos2_matrix=cos2_expectation(rho, time_nodes),
        cos2_quadrature=cos2_from_distribution(distribution),
    )


def mean_masked_frame(kernel: KernelMatrix, dataset: DiffractionDataset) -> tuple[np.ndarray, np.ndarray]:
    """Rows kept by both kernel and detector mask, and the time-averaged frame on them."""
    rows = np.intersect1d(kernel.rows(), dataset.geometry.kept_rows())
    return rows, dataset.frames[:, rows].mean(axis=0)


def invert_frames(config: PipelineConfig, dataset: DiffractionDataset, kernel: KernelMatrix) -> InversionResult:
    """Choose λ on the time-averaged frame, then invert every frame with it."""
    rows, frame = mean_masked_frame(kernel, dataset)
    lam, report = select_lambda(config.regularization, kernel.matrix[rows], frame)
    distribution = invert_dataset(kernel, dataset, lam, max_workers=config.detector.max_workers)
    return InversionResult(distribution=distribution, lam=lam, report=report)


def reconstruct_rotational(
    config: PipelineConfig,
    measured: AngularDistribution,
    reference: RotationalDensityMatrix | None = None,
) -> QTResult:
    spec = RotorSpec.from_config(config.rotor)
    j_max = config.rotor.j_max
    targets = None
    if config.iteration.use_partial_traces:
        if config.rotor.initial_state == "random_trial":
            targets = random_trial_state(spec.rotational_constant).partial_traces()
        else:
            targets = thermal_partial_traces(spec, j_max, config.rotor.thermal_tail_tolerance)
    start = initial_guess(
        config.iteration.initial_guess,
        j_max,
        spec=spec,
        reference=reference,
        rotational_constant=spec.rotational_constant,
        seed=config.iteration.seed,
        tail_tolerance=config.rotor.thermal_tail_tolerance,
    )
    strict = config.grids.sampling_guard == "raise"
    return qt_iterate(start, measured, config.iteration, targets, reference, strict=strict)


def simulate_vibrational(config: PipelineConfig) -> VibrationalSimulation:
    vib = config.vibrational
    basis = OscillatorBasis.from_config(vib, enforce_resolution=config.grids.sampling_guard == "raise")
    table = build_pattern_table(basis, config.iteration.max_workers)
    rho = random_vib_density(basis, vib.state_seed, vib.state_rank)
    time_nodes = vib_period_time_nodes(basis, vib.n_time)
    movie = simulate_movie(rho, time_nodes, table)
    snapshot = movie_from_blockwise(synthesize_vib_blockwise(rho, table), np.array([vib.snapshot_time_fs])).values[0]
    logger.info("vibrational_simulated", modes=basis.mode_count, n_max=basis.n_max, frames=time_nodes.size)
    return VibrationalSimulation(basis=basis, table=table, rho=rho, movie=movie, snapshot=snapshot)


def reconstruct_vibrational(
    config: PipelineConfig,
    movie: VibrationalMovie,
    reference: VibrationalDensityMatrix | None = None,
    table: PatternFunctionTable | None = None,
    start: VibrationalDensityMatrix | None = None,
) -> VibQTResult:
    """Iterate from ``start``, or from the configured initial guess when it is None."""
    vib = config.vibrational
    basis = movie.basis
    table = build_pattern_table(basis, config.iteration.max_workers) if table is None else table
    populations = None
    if vib.diagonal_constraint:
        if reference is None:
            raise ValidationError("diagonal constraint needs known populations from a reference state")
        populations = np.diag(reference.matrix).real.copy()
    momentum = [MomentumConstraint(tuple(c.powers), c.measured_value) for c in vib.momentum_constraints]
    constraints = VibConstraintSet.from_config(config.iteration, populations, momentum)
    if start is None:
        start = vib_initial_guess(config.iteration.initial_guess, basis, reference, config.iteration.seed)
    strict = config.grids.sampling_guard == "raise"
    return iterative_vib_qt(start, movie, config.iteration, table, constraints, reference, strict=strict)
