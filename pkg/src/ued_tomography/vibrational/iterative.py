"""Iterative tomography of a separable vibrational wavepacket.

The transform alternates between the density matrix and the blockwise
probabilities Pr_Δ⃗(x⃗).  Offsets with a unique frequency index are replaced
by their measured Fourier component; offsets sharing an index are rescaled
so that their sum reproduces it.  The density side applies Hermitization and
HIO positivity, then imposes unit trace, known populations and momentum
products by one linear projection alternated with eigenvalue clipping.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np
import structlog

from ued_tomography.config.pipeline import IterationConfig
from ued_tomography.errors import DivergenceError, ValidationError
from ued_tomography.evaluation.metrics import relative_l1
from ued_tomography.tomography.constraints import hio_relax
from ued_tomography.tomography.iterative import IterationRecord, has_plateaued
from ued_tomography.vibrational.blockwise import (
    BlockwiseVibProbability,
    VibrationalDensityMatrix,
    VibrationalMovie,
    blockwise_from_measurement,
    density_from_blockwise,
    movie_from_blockwise,
    synthesize_vib_blockwise,
)
from ued_tomography.vibrational.momentum import MomentumConstraint, mode_operator, project_expectations
from ued_tomography.vibrational.oscillator import OscillatorBasis, PatternFunctionTable

logger = structlog.get_logger()

VibInitialGuess = Literal["thermal", "random", "diagonal"]
_ZERO_SUM = 1e-14


@dataclass
class VibConstraintSet:
    """Density-side constraints of the vibrational loop.

    Attributes:
        populations: Known diagonal of ρ in basis order, or None.
        momentum: Measured momentum products, imposed with the trace and populations.
        projection_max_steps: Rounds of linear projection and eigenvalue
            clipping before positivity is forced.
    """

    hio_beta: float = 0.9
    psd_tolerance: float = 1e-8
    hio_max_steps: int = 50
    projection_max_steps: int = 500
    populations: np.ndarray | None = None
    momentum: list[MomentumConstraint] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not 0.0 < self.hio_beta <= 1.0:
            raise ValidationError(f"hio_beta must lie in (0, 1], got {self.hio_beta}")
        if self.populations is not None:
            total = float(np.sum(self.populations))
            if np.any(self.populations < 0) or abs(total - 1.0) > 1e-8:
                raise ValidationError("known populations must be nonnegative and sum to 1")

    @classmethod
    def from_config(
        cls,
        config: IterationConfig,
        populations: np.ndarray | None = None,
        momentum: list[MomentumConstraint] | None = None,
    ) -> VibConstraintSet:
        return cls(
            hio_beta=config.hio_beta,
            psd_tolerance=config.psd_tolerance,
            hio_max_steps=config.hio_max_steps,
            populations=populations,
            momentum=list(momentum or []),
        )


@dataclass
class VibIterationState:
    rho: VibrationalDensityMatrix
    blockwise: BlockwiseVibProbability
    iteration: int = 0
    error_rho: float | None = None
    error_pr: float = float("inf")
    history: list[IterationRecord] = field(default_factory=list)


@dataclass
class VibQTResult:
    state: VibIterationState
    stop_reason: str
    experiment_mode: bool

    @property
    def rho(self) -> VibrationalDensityMatrix:
        return self.state.rho

    @property
    def history(self) -> list[IterationRecord]:
        return self.state.history


def ground_state(basis: OscillatorBasis) -> VibrationalDensityMatrix:
    return VibrationalDensityMatrix.pure(basis, {(0,) * basis.mode_count: 1.0})


def random_vib_density(basis: OscillatorBasis, seed: int = 0, rank: int | None = None) -> VibrationalDensityMatrix:
    """Seeded random state GG†/Tr with G of shape (D, rank)."""
    rng = np.random.default_rng(seed)
    size = len(basis.states())
    rank = size if rank is None else rank
    factor = rng.standard_normal((size, rank)) + 1j * rng.standard_normal((size, rank))
    matrix = factor @ factor.conj().T
    return VibrationalDensityMatrix(basis=basis, matrix=matrix / np.trace(matrix).real)


def vib_initial_guess(
    kind: VibInitialGuess,
    basis: OscillatorBasis,
    reference: VibrationalDensityMatrix | None = None,
    seed: int = 0,
) -> VibrationalDensityMatrix:
    """Starting point: ground state, a seeded random state or the reference populations."""
    if kind == "thermal":
        return ground_state(basis)
    if kind == "random":
        return random_vib_density(basis, seed)
    if kind == "diagonal":
        if reference is None:
            raise ValidationError("diagonal initial guess needs a reference state")
        return reference.like(np.diag(np.diag(reference.matrix)).astype(complex))
    raise ValidationError(f"unknown initial guess {kind!r}")


def vib_probability_constraint(
    current: BlockwiseVibProbability,
    measured: BlockwiseVibProbability,
) -> BlockwiseVibProbability:
    """Impose the measured Fourier components on ``current``.

    Unique offsets take the measured block.  Offsets sharing an index k are
    scaled pointwise by P̃r_k / Σ Pr_Δ⃗; where that sum vanishes the
    measured component is split equally.
    """
    blocks = dict(current.blocks)
    blocks.update({offset: block for offset, block in measured.blocks.items()})
    split_points = 0
    for k, offsets in measured.shared.items():
        target = measured.components[k]
        total = sum(current.blocks[d] for d in offsets)
        small = np.abs(total) < _ZERO_SUM
        beta = np.divide(target, total, out=np.zeros_like(target, dtype=complex), where=~small)
        for d in offsets:
            blocks[d] = np.where(small, target / len(offsets), beta * current.blocks[d])
        split_points += int(np.count_nonzero(small))
    if split_points:
        logger.warning("probability_constraint_equal_split", points=split_points)
    return current.like(blocks)


def _clip_negative(matrix: np.ndarray) -> np.ndarray:
    eigenvalues, vectors = np.linalg.eigh(matrix)
    return (vectors * np.clip(eigenvalues, 0.0, None)) @ vectors.conj().T


def vib_density_constraints(
    rho: VibrationalDensityMatrix,
    constraints: VibConstraintSet,
    previous: VibrationalDensityMatrix | None = None,
) -> tuple[VibrationalDensityMatrix, float, bool]:
    """Hermitize, relax to PSD, then impose trace, populations and momenta.

    After the HIO step the linear constraints (unit trace, known
    populations, measured momentum products) are imposed together by one
    Frobenius projection.  While that projection leaves λ_min below
    −psd_tolerance, it alternates with clipping of negative eigenvalues, up
    to ``projection_max_steps`` rounds.  If the rounds run out the state is
    clipped and renormalized, so positivity wins over the linear
    constraints.

    Returns the constrained state, the smallest eigenvalue of that returned
    state and whether both loops reached the tolerance.
    """
    if not np.all(np.isfinite(rho.matrix)):
        raise ValidationError("density matrix contains non-finite entries")
    matrix = 0.5 * (rho.matrix + rho.matrix.conj().T)
    reference = None if previous is None else previous.matrix
    matrix, _, hio_converged, smallest = hio_relax(
        matrix, reference, constraints.hio_beta, constraints.psd_tolerance, constraints.hio_max_steps
    )
    if not hio_converged:
        logger.warning("hio_cap_reached", steps=constraints.hio_max_steps, min_eigenvalue=smallest)

    trace = float(np.trace(matrix).real)
    if trace <= 0.0:
        raise ValidationError(f"trace collapsed to {trace:.3e}")
    operators, values = linear_constraints(rho.basis, constraints)
    matrix = matrix / trace
    projected = False
    for _ in range(constraints.projection_max_steps):
        matrix = project_expectations(matrix, operators, values)
        matrix = 0.5 * (matrix + matrix.conj().T)
        if float(np.linalg.eigvalsh(matrix)[0]) >= -constraints.psd_tolerance:
            projected = True
            break
        matrix = _clip_negative(matrix)
    if not projected:
        matrix = _clip_negative(matrix)
        matrix = matrix / np.trace(matrix).real
        logger.warning("constraint_projection_cap_reached", steps=constraints.projection_max_steps)
    smallest = float(np.linalg.eigvalsh(matrix)[0])
    return rho.like(matrix), smallest, hio_converged and projected


def linear_constraints(basis: OscillatorBasis, constraints: VibConstraintSet) -> tuple[list[np.ndarray], list[float]]:
    """Hermitian operators B_j and targets c_j with Tr(ρB_j) = c_j, the unit trace first."""
    size = len(basis.states())
    operators, values = [np.eye(size, dtype=complex)], [1.0]
    if constraints.populations is not None:
        for i, population in enumerate(constraints.populations):
            projector = np.zeros((size, size), dtype=complex)
            projector[i, i] = 1.0
            operators.append(projector)
            values.append(float(population))
    for momentum in constraints.momentum:
        operator = mode_operator(basis, momentum.powers)
        operators.append(0.5 * (operator + operator.conj().T))
        values.append(momentum.measured_value)
    return operators, values


def iterative_vib_qt(
    initial_rho: VibrationalDensityMatrix,
    measured: VibrationalMovie,
    config: IterationConfig,
    table: PatternFunctionTable,
    constraints: VibConstraintSet | None = None,
    reference_rho: VibrationalDensityMatrix | None = None,
    strict: bool = True,
) -> VibQTResult:
    """Reconstruct the vibrational density matrix whose position movie is ``measured``.

    Stopping and divergence rules match the rotational loop; the result is
    referenced to t = 0.  ``strict=False`` accepts a movie sampled below the
    Nyquist count.

    Raises:
        AliasingError: If the movie is sampled too coarsely in time.
        DivergenceError: If ε(Pr) runs away; carries the history.
    """
    constraints = VibConstraintSet.from_config(config) if constraints is None else constraints
    measured_blockwise = blockwise_from_measurement(measured, strict)
    reference = None if reference_rho is None else reference_rho.evolve(0.0)
    experiment_mode = reference is None

    rho = initial_rho.evolve(0.0)
    state = VibIterationState(rho=rho, blockwise=synthesize_vib_blockwise(rho, table))
    basis = initial_rho.basis
    log = logger.bind(modes=basis.mode_count, n_max=basis.n_max, experiment_mode=experiment_mode)
    log.info(
        "vib_qt_started",
        max_iterations=config.max_iterations,
        shared_indices=sorted(measured_blockwise.shared),
    )
    if not strict:
        log.warning("sampling_bounds_relaxed", x_step=basis.x_step, n_time=measured.time_nodes.size)

    stop_reason = "max_iterations"
    best = float("inf")
    for n in range(1, config.max_iterations + 1):
        constrained = vib_probability_constraint(state.blockwise, measured_blockwise)
        candidate = density_from_blockwise(constrained, table)
        new_rho, smallest, converged = vib_density_constraints(candidate, constraints, previous=state.rho)

        new_blockwise = synthesize_vib_blockwise(new_rho, table)
        error_pr = relative_l1(movie_from_blockwise(new_blockwise, measured.time_nodes), measured)
        error_rho = relative_l1(new_rho, reference if reference is not None else state.rho)
        record = IterationRecord(
            iteration=n, error_rho=error_rho, error_pr=error_pr, min_eigenvalue=smallest, hio_converged=converged
        )
        state = VibIterationState(
            rho=new_rho,
            blockwise=new_blockwise,
            iteration=n,
            error_rho=error_rho,
            error_pr=error_pr,
            history=[*state.history, record],
        )
        log.info("vib_qt_iteration", iteration=n, error_rho=error_rho, error_pr=error_pr)

        best = min(best, error_pr)
        if error_pr <= config.error_floor:
            stop_reason = "error_floor"
            break
        if best > 0.0 and error_pr > config.divergence_factor * best:
            log.error("vib_qt_diverged", iteration=n, error_pr=error_pr, best=best)
            raise DivergenceError(f"error grew from {best:.3e} to {error_pr:.3e} at iteration {n}", state.history)
        if has_plateaued(state.history, config.plateau_window, config.plateau_tolerance):
            stop_reason = "plateau"
            break

    log.info("vib_qt_finished", iterations=state.iteration, stop_reason=stop_reason, error_pr=state.error_pr)
    return VibQTResult(state=state, stop_reason=stop_reason, experiment_mode=experiment_mode)
