"""Momentum-product observables for degenerate vibrational coherences.

When two product states share an energy (|20⟩ and |01⟩ at r = (1, 2)) their
coherence is static in the position movie and only Re(ρ) reaches the
pattern-function inversion.  An observable such as p₁²p₂ couples the pair
through an imaginary matrix element and fixes the remaining freedom.

Operators use p = −i(a − a†)/√2 in oscillator units; powers are formed in an
enlarged number basis and truncated afterwards.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from itertools import combinations

import numpy as np
import structlog
from scipy.linalg import lstsq

from ued_tomography.errors import ValidationError
from ued_tomography.vibrational.blockwise import VibrationalDensityMatrix
from ued_tomography.vibrational.oscillator import OscillatorBasis, State

logger = structlog.get_logger()


@dataclass(frozen=True)
class MomentumConstraint:
    """Measured ⟨Π_i p_i^{k_i}⟩.

    Attributes:
        powers: Exponent per mode, e.g. (2, 1) for p₁²p₂.
        measured_value: The expectation value; real for Hermitian products.
        target_pair: Optional degenerate pair the observable is meant to resolve.
    """

    powers: tuple[int, ...]
    measured_value: float
    target_pair: tuple[State, State] | None = None


@dataclass
class ConstraintResidual:
    expectation: float
    residual: float
    informative: bool


def momentum_matrix(n_max: int, power: int) -> np.ndarray:
    """⟨n|p^power|m⟩ for n, m ≤ n_max."""
    if power < 0:
        raise ValidationError("momentum power must be nonnegative")
    size = n_max + 1 + power
    lowering = np.diag(np.sqrt(np.arange(1, size)), k=1)
    p = -1j * (lowering - lowering.T) / np.sqrt(2.0)
    full = np.linalg.matrix_power(p, power)
    return full[: n_max + 1, : n_max + 1]


def mode_operator(basis: OscillatorBasis, powers: tuple[int, ...]) -> np.ndarray:
    """Π_i p_i^{k_i} on the product basis, last mode fastest."""
    if len(powers) != basis.mode_count:
        raise ValidationError(f"expected {basis.mode_count} powers, got {len(powers)}")
    return reduce(np.kron, [momentum_matrix(basis.n_max, k) for k in powers])


def degenerate_pairs(basis: OscillatorBasis) -> list[tuple[State, State]]:
    """Distinct product states with equal Σ r_i n_i."""
    return [(a, b) for a, b in combinations(basis.states(), 2) if basis.energy(a) == basis.energy(b)]


def two_level_expectation(rho: np.ndarray, operator: np.ndarray) -> float:
    """Tr(ρA) on a 2×2 subspace as ρ₁₁a₁₁ + ρ₂₂a₂₂ + 2 Re(ρ₁₂a₂₁)."""
    populations = (rho[0, 0] * operator[0, 0]).real + (rho[1, 1] * operator[1, 1]).real
    return float(populations + 2.0 * (rho[0, 1] * operator[1, 0]).real)


def is_informative(basis: OscillatorBasis, operator: np.ndarray, pair: tuple[State, State] | None = None) -> bool:
    """True when ``operator`` couples the target pair, or any degenerate pair if none is given."""
    states = basis.states()
    pairs = [pair] if pair is not None else degenerate_pairs(basis)
    return any(abs(operator[states.index(tuple(a)), states.index(tuple(b))]) > 1e-12 for a, b in pairs)


def degenerate_momentum_constraint(
    rho: VibrationalDensityMatrix,
    constraint: MomentumConstraint,
) -> ConstraintResidual:
    """|Tr(ρA) − measured| for the momentum product A of ``constraint``.

    Logs ``uninformative_momentum_constraint`` when A leaves the targeted
    coherence untouched.
    """
    operator = mode_operator(rho.basis, constraint.powers)
    informative = is_informative(rho.basis, operator, constraint.target_pair)
    if not informative:
        logger.warning(
            "uninformative_momentum_constraint",
            powers=constraint.powers,
            target_pair=constraint.target_pair,
        )
    expectation = float(np.trace(rho.matrix @ operator).real)
    return ConstraintResidual(
        expectation=expectation,
        residual=abs(expectation - constraint.measured_value),
        informative=informative,
    )


def project_momentum(rho: VibrationalDensityMatrix, constraint: MomentumConstraint) -> VibrationalDensityMatrix:
    """Frobenius projection onto {ρ : Tr(ρA) = v}; keeps Hermiticity."""
    operator = mode_operator(rho.basis, constraint.powers)
    hermitian = 0.5 * (operator + operator.conj().T)
    return rho.like(project_expectations(rho.matrix, [hermitian], [constraint.measured_value]))


def project_expectations(matrix: np.ndarray, operators: list[np.ndarray], values: list[float]) -> np.ndarray:
    """Frobenius projection of a Hermitian matrix onto {ρ : Tr(ρB_j) = c_j for all j}.

    The B_j are Hermitian.  The correction Σ μ_j B_j solves the Gram system
    in the least-squares sense, so redundant constraints (the identity next
    to a full set of populations) are allowed as long as they agree.
    """
    if not operators:
        return matrix
    gram = np.array([[np.vdot(a, b).real for b in operators] for a in operators])
    gaps = np.array(values) - np.array([np.trace(matrix @ b).real for b in operators])
    weights, *_ = lstsq(gram, gaps)
    return matrix + sum(w * b for w, b in zip(weights, operators))
