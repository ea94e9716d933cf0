"""Angular probability distributions synthesized from a rotational density matrix."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ued_tomography.angular.grid import AngularGrid
from ued_tomography.angular.legendre import LegendreTable, evaluate_legendre
from ued_tomography.errors import ValidationError
from ued_tomography.rotor.density import RotationalDensityMatrix
from ued_tomography.tomography.blockwise import BlockwiseProbability


@dataclass
class AngularDistribution:
    """Pr(θ, φ, t) in probability per steradian.

    Attributes:
        grid: Orientation quadrature grid.
        time_nodes: Sample times, ps.
        values: Real array of shape (n_time, n_phi, n_theta); flattening the
            last two axes puts θ fastest within φ, the kernel column order.
    """

    grid: AngularGrid
    time_nodes: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        expected = (self.time_nodes.size, self.grid.n_phi, self.grid.n_theta)
        if self.values.shape != expected:
            raise ValidationError(f"distribution shape {self.values.shape} does not match grid {expected}")

    def norms(self) -> np.ndarray:
        """∬ Pr sin θ dθ dφ at each time node."""
        return self.as_vectors() @ self.grid.cell_weights

    def as_vectors(self) -> np.ndarray:
        return self.values.reshape(self.time_nodes.size, -1)

    @classmethod
    def from_vectors(cls, grid: AngularGrid, time_nodes: np.ndarray, vectors: np.ndarray) -> AngularDistribution:
        return cls(grid=grid, time_nodes=time_nodes, values=vectors.reshape(time_nodes.size, grid.n_phi, grid.n_theta))


def _default_table(rho: RotationalDensityMatrix, grid: AngularGrid, legendre: LegendreTable | None) -> LegendreTable:
    if legendre is None:
        return evaluate_legendre(rho.j_max, grid)
    if legendre.j_max < rho.j_max or not legendre.grid.matches(grid):
        raise ValidationError("Legendre table does not cover the density matrix basis on this grid")
    return legendre


def synthesize_blockwise(
    rho: RotationalDensityMatrix,
    grid: AngularGrid,
    time_nodes: np.ndarray,
    legendre: LegendreTable | None = None,
) -> BlockwiseProbability:
    """Pr_{m1,m2}(θ, t) for every block present in ``rho``."""
    table = _default_table(rho, grid, legendre)
    time_nodes = np.asarray(time_nodes, dtype=float)
    energies = rho.energies()
    dt = time_nodes - rho.reference_time

    blocks = {}
    for (m1, m2), block in rho.blocks.items():
        p1 = table.block(m1, rho.j_max)
        p2 = table.block(m2, rho.j_max)
        gap = np.subtract.outer(energies[abs(m1) :], energies[abs(m2) :])
        evolved = block[None, :, :] * np.exp(-1j * gap[None, :, :] * dt[:, None, None])
        blocks[(m1, m2)] = np.einsum("ai,tab,bi->ti", p1, evolved, p2)

    return BlockwiseProbability(
        grid=grid,
        time_nodes=time_nodes,
        rotational_constant=rho.rotational_constant,
        blocks=blocks,
    )


def distribution_from_blockwise(blockwise: BlockwiseProbability) -> AngularDistribution:
    """Pr(θ, φ, t) = (1/2π) Σ Pr_{m1,m2}(θ, t) e^{i(m1−m2)φ}."""
    grid = blockwise.grid
    values = np.zeros((blockwise.time_nodes.size, grid.n_phi, grid.n_theta), dtype=complex)
    for (m1, m2), block in blockwise.blocks.items():
        phase = np.exp(1j * (m1 - m2) * grid.phi_nodes)
        values += phase[None, :, None] * block[:, None, :]
    return AngularDistribution(grid=grid, time_nodes=blockwise.time_nodes, values=values.real / (2.0 * np.pi))


def synthesize_probability(
    rho: RotationalDensityMatrix,
    grid: AngularGrid,
    time_nodes: np.ndarray,
    legendre: LegendreTable | None = None,
) -> AngularDistribution:
    """Orientation probability of the wavepacket at each time node."""
    return distribution_from_blockwise(synthesize_blockwise(rho, grid, time_nodes, legendre))


def azimuthal_components(distribution: AngularDistribution, k: int) -> np.ndarray:
    """P̃r_k(θ, t) = ∫ Pr e^{−ikφ} dφ, shape (n_time, n_theta)."""
    grid = distribution.grid
    kernel = grid.weights_phi * np.exp(-1j * k * grid.phi_nodes)
    return np.einsum("p,tpj->tj", kernel, distribution.values)


def cos2_from_distribution(distribution: AngularDistribution) -> np.ndarray:
    """⟨cos²θ⟩(t) by quadrature over the sampled distribution."""
    grid = distribution.grid
    weights = np.outer(grid.weights_phi, grid.weights_theta * grid.cos_theta**2)
    return np.einsum("pj,tpj->t", weights, distribution.values)
