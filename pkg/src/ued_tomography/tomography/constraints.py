"""Physical constraints applied on both sides of the iterative transform.

On the probability side, the blockwise probabilities of each coherence
index k = m1 − m2 are rescaled so that their sum reproduces the measured
azimuthal component P̃r_k(θ, t).  On the density side, the chain is
Hermitization, partial-trace scaling, HIO positivity, m ↔ −m symmetry and
trace normalization, in a configurable order.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np
import structlog

from ued_tomography.config.pipeline import DEFAULT_CONSTRAINT_ORDER, IterationConfig
from ued_tomography.errors import ValidationError
from ued_tomography.rotor.density import RotationalDensityMatrix
from ued_tomography.rotor.model import RotorSpec, thermal_density
from ued_tomography.tomography.blockwise import BlockwiseProbability

logger = structlog.get_logger()

ClassKey = tuple[int, int]
_ZERO_SUM = 1e-14


@dataclass
class ConstraintSet:
    """Everything the iteration knows about the state besides the current guess.

    Attributes:
        partial_trace_targets: (m, J mod 2) → Σ_J ⟨J m|ρ|J m⟩, conserved by
            the pulse.  Empty disables the partial-trace step.
        measured_components: k → P̃r_k(θ, t) of shape (n_time, n_theta).
        hio_beta: Relaxation parameter of the positivity step, in (0, 1].
        trace_tolerance: Total deviation of the partial traces tolerated
            before scaling.
        psd_tolerance: Smallest eigenvalue accepted as nonnegative.
        hio_max_steps: Cap on inner positivity steps.
        m_symmetry: Average the (m1, m2) and (−m1, −m2) blocks.
        order: Names of the density-side steps in application order.
    """

    partial_trace_targets: dict[ClassKey, float] = field(default_factory=dict)
    measured_components: dict[int, np.ndarray] = field(default_factory=dict)
    hio_beta: float = 0.9
    trace_tolerance: float = 1e-3
    psd_tolerance: float = 1e-8
    hio_max_steps: int = 50
    m_symmetry: bool = True
    order: list[str] = field(default_factory=lambda: list(DEFAULT_CONSTRAINT_ORDER))

    def __post_init__(self) -> None:
        if not 0.0 < self.hio_beta <= 1.0:
            raise ValidationError(f"hio_beta must lie in (0, 1], got {self.hio_beta}")
        if self.partial_trace_targets:
            total = sum(self.partial_trace_targets.values())
            if abs(total - 1.0) > 1e-8:
                raise ValidationError(f"partial-trace targets sum to {total:.10f}, expected 1")
        unknown = set(self.order) - set(DEFAULT_CONSTRAINT_ORDER)
        if unknown:
            raise ValidationError(f"unknown constraint steps: {sorted(unknown)}")

    @classmethod
    def from_config(
        cls,
        config: IterationConfig,
        measured_components: dict[int, np.ndarray],
        partial_trace_targets: dict[ClassKey, float] | None = None,
    ) -> ConstraintSet:
        targets = partial_trace_targets if config.use_partial_traces and partial_trace_targets else {}
        return cls(
            partial_trace_targets=targets,
            measured_components=measured_components,
            hio_beta=config.hio_beta,
            trace_tolerance=config.partial_trace_tolerance,
            psd_tolerance=config.psd_tolerance,
            hio_max_steps=config.hio_max_steps,
            m_symmetry=config.m_symmetry,
            order=list(config.constraint_order),
        )


@dataclass
class ConstraintOutcome:
    """Density matrix after the constraint chain plus positivity diagnostics."""

    rho: RotationalDensityMatrix
    hio_steps: int = 0
    hio_converged: bool = True
    min_eigenvalue: float = 0.0


def thermal_partial_traces(spec: RotorSpec, j_max: int, tail_tolerance: float = 1e-6) -> dict[ClassKey, float]:
    """Per-class partial traces of the thermal ensemble; a nonresonant pulse leaves them unchanged."""
    return thermal_density(spec, j_max, tail_tolerance).partial_traces()


# ----------------------------------------------------------------------
# Probability side
# ----------------------------------------------------------------------


def probability_constraint(
    blockwise: BlockwiseProbability,
    measured: dict[int, np.ndarray],
) -> BlockwiseProbability:
    """Rescale each coherence family so that Σ_{m1−m2=k} Pr_{m1,m2} = P̃r_k.

    Every block of a family is multiplied by the same factor P̃r_k / Σ, so
    the relative proportions between blocks are kept at every (θ, t) node.
    Where the current sum vanishes the measured value is split equally.
    Families without a measurement are left unchanged.
    """
    families: dict[int, list[tuple[int, int]]] = defaultdict(list)
    for m1, m2 in blockwise.blocks:
        families[m1 - m2].append((m1, m2))

    blocks = dict(blockwise.blocks)
    for k, keys in families.items():
        if k not in measured:
            continue
        target = np.asarray(measured[k])
        if target.shape != (blockwise.time_nodes.size, blockwise.grid.n_theta):
            raise ValidationError(f"measured component k={k} has shape {target.shape}")
        total = sum(blockwise.blocks[key] for key in keys)
        degenerate = np.abs(total) < _ZERO_SUM
        factor = np.divide(target, total, out=np.zeros_like(total, dtype=complex), where=~degenerate)
        for key in keys:
            blocks[key] = np.where(degenerate, target / len(keys), blockwise.blocks[key] * factor)
        if degenerate.any():
            logger.warning("probability_constraint_equal_split", k=k, nodes=int(degenerate.sum()), blocks=len(keys))
    return blockwise.like(blocks)


# ----------------------------------------------------------------------
# Density side
# ----------------------------------------------------------------------


def hermitize(rho: RotationalDensityMatrix) -> RotationalDensityMatrix:
    blocks = {}
    for m1, m2 in rho.blocks:
        blocks[(m1, m2)] = 0.5 * (rho.block(m1, m2) + rho.block(m2, m1).conj().T)
    return rho.like(blocks)


def scale_partial_traces(
    rho: RotationalDensityMatrix,
    targets: dict[ClassKey, float],
    tolerance: float,
) -> RotationalDensityMatrix:
    """Congruence D ρ D with D = √α per (m, parity) class, α = target / current.

    Elements inside a class scale by α, elements between two classes by
    √(α α′).  Classes whose current sum is not positive get their deficit
    spread evenly over the class diagonal instead.
    """
    current = rho.partial_traces()
    deviation = sum(abs(current.get(key, 0.0) - value) for key, value in targets.items())
    if deviation <= tolerance:
        return rho

    root: dict[ClassKey, float] = {}
    shifts: dict[ClassKey, float] = {}
    for key, target in targets.items():
        value = current.get(key, 0.0)
        if value > _ZERO_SUM:
            root[key] = float(np.sqrt(target / value))
        else:
            root[key] = 1.0
            shifts[key] = target - value

    def scaling(m: int) -> np.ndarray:
        J = np.arange(abs(m), rho.j_max + 1)
        return np.array([root.get((m, int(j % 2)), 1.0) for j in J])

    blocks = {}
    for (m1, m2), block in rho.blocks.items():
        scaled = scaling(m1)[:, None] * block * scaling(m2)[None, :]
        if m1 == m2:
            J = np.arange(abs(m1), rho.j_max + 1)
            for parity in (0, 1):
                shift = shifts.get((m1, parity))
                members = np.flatnonzero(J % 2 == parity)
                if shift is not None and members.size:
                    scaled[members, members] += shift / members.size
        blocks[(m1, m2)] = scaled
    return rho.like(blocks)


def _pattern_components(keys: list[tuple[int, int]]) -> list[list[int]]:
    """Groups of m values coupled by at least one block of the pattern."""
    parent: dict[int, int] = {}

    def find(m: int) -> int:
        parent.setdefault(m, m)
        while parent[m] != m:
            parent[m] = parent[parent[m]]
            m = parent[m]
        return m

    for m1, m2 in keys:
        parent[find(m1)] = find(m2)
    groups: dict[int, list[int]] = defaultdict(list)
    for m in parent:
        groups[find(m)].append(m)
    return [sorted(group) for group in sorted(groups.values())]


def _indices(rho: RotationalDensityMatrix, ms: list[int]) -> np.ndarray:
    offsets = rho._offsets()
    return np.concatenate([offsets[m] + np.arange(rho.j_max - abs(m) + 1) for m in ms])


def hio_relax(
    sub: np.ndarray,
    reference: np.ndarray | None,
    beta: float,
    psd_tolerance: float,
    max_steps: int,
) -> tuple[np.ndarray, int, bool, float]:
    """HIO positivity on one Hermitian matrix.

    Returns the relaxed matrix (or the best iterate when the cap is hit),
    the number of steps taken, whether λ_min ≥ −psd_tolerance was reached,
    and the smallest eigenvalue.
    """
    best, best_min = sub, -np.inf
    for step in range(max_steps + 1):
        eigenvalues, vectors = np.linalg.eigh(0.5 * (sub + sub.conj().T))
        smallest = float(eigenvalues[0])
        if smallest > best_min:
            best, best_min = sub, smallest
        if smallest >= -psd_tolerance:
            return sub, step, True, smallest
        if step == max_steps:
            break
        prior = sub if reference is None else reference
        # value_prev − β·violation on the negative eigen-directions
        projected = np.einsum("ik,ij,jk->k", vectors.conj(), prior, vectors).real
        negative = eigenvalues < 0
        updated = np.where(negative, projected - beta * eigenvalues, eigenvalues)
        sub = (vectors * updated) @ vectors.conj().T
    return best, max_steps, False, best_min


def hio_positivity(
    rho: RotationalDensityMatrix,
    beta: float = 0.9,
    psd_tolerance: float = 1e-8,
    max_steps: int = 50,
    previous: RotationalDensityMatrix | None = None,
) -> ConstraintOutcome:
    """Hybrid input-output relaxation towards a positive semidefinite ρ.

    Works in the eigenbasis of each group of coupled m-blocks: components
    along eigenvectors with λ < 0 are replaced by ⟨v|ρ_prev|v⟩ − βλ, where
    ρ_prev is ``previous`` when given and the current inner iterate
    otherwise.  Repeats until λ_min ≥ −psd_tolerance or ``max_steps``.
    """
    dense = rho.to_dense()
    reference = None if previous is None else previous.to_dense()
    steps, converged, smallest = 0, True, np.inf
    for ms in _pattern_components(list(rho.blocks)):
        idx = _indices(rho, ms)
        sub = dense[np.ix_(idx, idx)]
        prior = None if reference is None else reference[np.ix_(idx, idx)]
        sub, used, ok, low = hio_relax(sub, prior, beta, psd_tolerance, max_steps)
        dense[np.ix_(idx, idx)] = sub
        steps = max(steps, used)
        converged = converged and ok
        smallest = min(smallest, low)

    if not converged:
        logger.warning("hio_cap_reached", steps=max_steps, min_eigenvalue=smallest)
    return ConstraintOutcome(
        rho=rho.from_dense(dense),
        hio_steps=steps,
        hio_converged=converged,
        min_eigenvalue=float(smallest),
    )


def symmetrize_m(rho: RotationalDensityMatrix) -> RotationalDensityMatrix:
    """Set blocks (m1, m2) and (−m1, −m2) to their mean."""
    blocks = {}
    for m1, m2 in rho.blocks:
        mirror = (-m1, -m2)
        if mirror in rho.blocks:
            blocks[(m1, m2)] = 0.5 * (rho.blocks[(m1, m2)] + rho.blocks[mirror])
        else:
            blocks[(m1, m2)] = rho.blocks[(m1, m2)].copy()
    return rho.like(blocks)


def normalize_trace(rho: RotationalDensityMatrix) -> RotationalDensityMatrix:
    trace = rho.trace()
    if abs(trace) < _ZERO_SUM:
        raise ValidationError("cannot normalize a density matrix with zero trace")
    return rho.like({key: block / trace for key, block in rho.blocks.items()})


def density_constraints(
    rho: RotationalDensityMatrix,
    constraints: ConstraintSet,
    previous: RotationalDensityMatrix | None = None,
) -> ConstraintOutcome:
    """Apply the density-side constraint chain in ``constraints.order``.

    Raises:
        ValidationError: If ``rho`` holds non-finite elements.
    """
    if not all(np.all(np.isfinite(block)) for block in rho.blocks.values()):
        raise ValidationError("density matrix contains non-finite elements")

    outcome = ConstraintOutcome(rho=rho)
    current = rho
    for step in constraints.order:
        if step == "hermitize":
            current = hermitize(current)
        elif step == "partial_trace" and constraints.partial_trace_targets:
            current = scale_partial_traces(current, constraints.partial_trace_targets, constraints.trace_tolerance)
        elif step == "positivity":
            outcome = hio_positivity(
                current,
                beta=constraints.hio_beta,
                psd_tolerance=constraints.psd_tolerance,
                max_steps=constraints.hio_max_steps,
                previous=previous,
            )
            current = outcome.rho
        elif step == "m_symmetry" and constraints.m_symmetry:
            current = symmetrize_m(current)
        elif step == "trace":
            current = normalize_trace(current)

    outcome.rho = current
    return outcome
