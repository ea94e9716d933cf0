"""Iterative quantum tomography of a rotational wavepacket.

One iteration maps the current density matrix to blockwise probabilities,
forces those to agree with the measured azimuthal components, inverts each
m-block analytically and applies the density-matrix constraints:

    ρ_n → Pr_{m1,m2} → (β-scaled) Pr_{m1,m2} → ρ' → constraints → ρ_{n+1}

The loop stops at ``max_iterations``, when ε(Pr) falls below the error
floor, or when ε(Pr) has plateaued; it aborts when ε(Pr) grows by
``divergence_factor`` over its running minimum.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
import structlog

from ued_tomography.angular.legendre import LegendreTable, evaluate_legendre
from ued_tomography.config.pipeline import IterationConfig
from ued_tomography.errors import DivergenceError, ValidationError
from ued_tomography.evaluation.metrics import relative_l1
from ued_tomography.rotor.density import BlockKey, RotationalDensityMatrix, diagonal_keys
from ued_tomography.rotor.model import RotorSpec, thermal_density
from ued_tomography.rotor.synthesis import (
    AngularDistribution,
    azimuthal_components,
    distribution_from_blockwise,
    synthesize_blockwise,
)
from ued_tomography.tomography.blockwise import BlockwiseProbability, check_period_sampling
from ued_tomography.tomography.constraints import ConstraintSet, density_constraints, probability_constraint
from ued_tomography.tomography.mblock import invert_block

logger = structlog.get_logger()

InitialGuess = Literal["thermal", "random", "diagonal"]


@dataclass
class IterationRecord:
    """One row of the convergence history."""

    iteration: int
    error_rho: float | None
    error_pr: float
    min_eigenvalue: float
    hio_converged: bool


@dataclass
class IterationState:
    """Current iterate; ``history`` only grows."""

    rho: RotationalDensityMatrix
    blockwise: BlockwiseProbability
    iteration: int = 0
    error_rho: float | None = None
    error_pr: float = float("inf")
    history: list[IterationRecord] = field(default_factory=list)


@dataclass
class QTResult:
    """Final state of a tomography run.

    Attributes:
        state: Last iterate with its full history.
        stop_reason: ``"max_iterations"``, ``"plateau"`` or ``"error_floor"``.
        experiment_mode: True when ε(ρ̂) was measured against the previous
            iterate because no reference state was supplied.
    """

    state: IterationState
    stop_reason: str
    experiment_mode: bool

    @property
    def rho(self) -> RotationalDensityMatrix:
        return self.state.rho

    @property
    def history(self) -> list[IterationRecord]:
        return self.state.history


# ----------------------------------------------------------------------
# Trial states and initial guesses
# ----------------------------------------------------------------------


def random_trial_state(rotational_constant: float = 1.0) -> RotationalDensityMatrix:
    """Five-block test state at j_max = 4 with rank-one blocks.

    Block m = 0 is (1/42) v vᵀ over J = 0, 1, 2 and blocks m = ±1, ±2 are
    (1/84) v vᵀ over J = |m| .. |m|+2, with v = (2, 3, 1).  All phases
    vanish at t = 0.
    """
    j_max = 4
    v = np.array([2.0, 3.0, 1.0])
    rho = RotationalDensityMatrix.zeros(
        j_max, keys=[(m, m) for m in range(-2, 3)], rotational_constant=rotational_constant
    )
    for m in range(-2, 3):
        scale = 1.0 / 42.0 if m == 0 else 1.0 / 84.0
        rho.blocks[(m, m)][:3, :3] = scale * np.outer(v, v)
    return rho


def random_density(
    j_max: int,
    keys: list[BlockKey],
    rotational_constant: float,
    seed: int = 0,
) -> RotationalDensityMatrix:
    """Seeded random positive semidefinite state cut to the block pattern ``keys``."""
    rng = np.random.default_rng(seed)
    template = RotationalDensityMatrix.zeros(j_max, keys=keys, rotational_constant=rotational_constant)
    size = template.dimension
    factor = rng.standard_normal((size, size)) + 1j * rng.standard_normal((size, size))
    rho = template.from_dense(factor @ factor.conj().T)
    mirrored = {
        key: 0.5 * (block + rho.blocks[(-key[0], -key[1])]) if (-key[0], -key[1]) in rho.blocks else block
        for key, block in rho.blocks.items()
    }
    rho = rho.like(mirrored)
    return rho.like({key: block / rho.trace() for key, block in rho.blocks.items()})


def diagonal_density(reference: RotationalDensityMatrix, keys: list[BlockKey] | None = None) -> RotationalDensityMatrix:
    """Keep only the populations of ``reference``; coherences start at zero."""
    keys = reference.keys if keys is None else keys
    rho = RotationalDensityMatrix.zeros(
        reference.j_max,
        keys=keys,
        rotational_constant=reference.rotational_constant,
        centrifugal_distortion=reference.centrifugal_distortion,
    )
    for m1, m2 in keys:
        if m1 == m2:
            rho.blocks[(m1, m2)] = np.diag(np.diag(reference.block(m1, m1))).astype(complex)
    return rho


def initial_guess(
    kind: InitialGuess,
    j_max: int,
    keys: list[BlockKey] | None = None,
    spec: RotorSpec | None = None,
    reference: RotationalDensityMatrix | None = None,
    rotational_constant: float | None = None,
    seed: int = 0,
    tail_tolerance: float = 1e-6,
) -> RotationalDensityMatrix:
    """Starting density matrix for :func:`qt_iterate`.

    Raises:
        ValidationError: If the inputs needed for ``kind`` are missing.
    """
    keys = diagonal_keys(j_max) if keys is None else keys
    if kind == "thermal":
        if spec is None:
            raise ValidationError("thermal initial guess needs a rotor spec")
        thermal = thermal_density(spec, j_max, tail_tolerance)
        return diagonal_density(thermal, keys)
    if kind == "diagonal":
        if reference is None:
            raise ValidationError("diagonal initial guess needs a reference state")
        return diagonal_density(reference, keys)
    if kind == "random":
        constant = rotational_constant
        if constant is None:
            constant = spec.rotational_constant if spec is not None else 0.0
        if constant <= 0.0:
            raise ValidationError("random initial guess needs a rotational constant")
        return random_density(j_max, keys, constant, seed)
    raise ValidationError(f"unknown initial guess {kind!r}")


# ----------------------------------------------------------------------
# Iteration
# ----------------------------------------------------------------------


def measured_components(measured: AngularDistribution, keys: list[BlockKey]) -> dict[int, np.ndarray]:
    """P̃r_k(θ, t) for every coherence index present in the block pattern."""
    return {k: azimuthal_components(measured, k) for k in sorted({m1 - m2 for m1, m2 in keys})}


def invert_all_blocks(
    blockwise: BlockwiseProbability,
    keys: list[BlockKey],
    j_max: int,
    legendre: LegendreTable,
    max_workers: int = 1,
    strict: bool = True,
) -> dict[BlockKey, np.ndarray]:
    """Invert every (m1, m2) block; blocks are independent and may run on threads."""

    def invert(key: BlockKey) -> np.ndarray:
        return invert_block(blockwise, key[0], key[1], j_max, legendre, strict)

    with ThreadPoolExecutor(max_workers=max(1, max_workers)) as pool:
        blocks = list(pool.map(invert, keys))
    return dict(zip(keys, blocks))


def has_plateaued(history: list[IterationRecord], window: int, tolerance: float) -> bool:
    if len(history) <= window:
        return False
    before = history[-1 - window].error_pr
    now = history[-1].error_pr
    return before > 0.0 and abs(before - now) / before < tolerance


def qt_iterate(
    initial_rho: RotationalDensityMatrix,
    measured: AngularDistribution,
    config: IterationConfig,
    partial_trace_targets: dict[tuple[int, int], float] | None = None,
    reference_rho: RotationalDensityMatrix | None = None,
    legendre: LegendreTable | None = None,
    strict: bool = True,
) -> QTResult:
    """Reconstruct the density matrix whose orientation movie is ``measured``.

    The density matrix is returned at t = 0, the phase origin of the
    inversion.  With ``reference_rho`` the density error is measured
    against the reference; otherwise against the previous iterate.
    ``strict=False`` runs on θ and t grids coarser than j_max requires.

    Raises:
        ValidationError: If the time grid does not span one revival period.
        DivergenceError: If ε(Pr) exceeds ``divergence_factor`` times its
            minimum; the exception carries the history so far.
    """
    j_max = initial_rho.j_max
    if initial_rho.rotational_constant <= 0.0:
        raise ValidationError("initial density matrix needs a positive rotational constant")
    period = 2.0 * np.pi / initial_rho.rotational_constant
    check_period_sampling(measured.time_nodes, period)

    grid = measured.grid
    table = evaluate_legendre(2 * j_max, grid) if legendre is None else legendre
    keys = initial_rho.keys
    constraints = ConstraintSet.from_config(config, measured_components(measured, keys), partial_trace_targets)
    reference = None if reference_rho is None else reference_rho.evolve(0.0)
    experiment_mode = reference is None

    rho = initial_rho.evolve(0.0)
    blockwise = synthesize_blockwise(rho, grid, measured.time_nodes, table)
    state = IterationState(rho=rho, blockwise=blockwise)
    log = logger.bind(j_max=j_max, blocks=len(keys), experiment_mode=experiment_mode)
    log.info("qt_started", max_iterations=config.max_iterations, initial_guess=config.initial_guess)
    if not strict:
        log.warning("sampling_bounds_relaxed", n_theta=grid.n_theta, n_time=measured.time_nodes.size)

    stop_reason = "max_iterations"
    best = float("inf")
    for n in range(1, config.max_iterations + 1):
        constrained = probability_constraint(state.blockwise, constraints.measured_components)
        inverted = invert_all_blocks(constrained, keys, j_max, table, config.max_workers, strict)
        candidate = state.rho.like(inverted)
        outcome = density_constraints(candidate, constraints, previous=state.rho)

        new_rho = outcome.rho
        new_blockwise = synthesize_blockwise(new_rho, grid, measured.time_nodes, table)
        error_pr = relative_l1(distribution_from_blockwise(new_blockwise), measured)
        error_rho = relative_l1(new_rho, reference if reference is not None else state.rho)

        record = IterationRecord(
            iteration=n,
            error_rho=error_rho,
            error_pr=error_pr,
            min_eigenvalue=outcome.min_eigenvalue,
            hio_converged=outcome.hio_converged,
        )
        state = IterationState(
            rho=new_rho,
            blockwise=new_blockwise,
            iteration=n,
            error_rho=error_rho,
            error_pr=error_pr,
            history=[*state.history, record],
        )
        log.info("qt_iteration", iteration=n, error_rho=error_rho, error_pr=error_pr)

        best = min(best, error_pr)
        if error_pr <= config.error_floor:
            stop_reason = "error_floor"
            break
        if best > 0.0 and error_pr > config.divergence_factor * best:
            log.error("qt_diverged", iteration=n, error_pr=error_pr, best=best)
            raise DivergenceError(f"error grew from {best:.3e} to {error_pr:.3e} at iteration {n}", state.history)
        if has_plateaued(state.history, config.plateau_window, config.plateau_tolerance):
            stop_reason = "plateau"
            break

    log.info("qt_finished", iterations=state.iteration, stop_reason=stop_reason, error_pr=state.error_pr)
    return QTResult(state=state, stop_reason=stop_reason, experiment_mode=experiment_mode)
