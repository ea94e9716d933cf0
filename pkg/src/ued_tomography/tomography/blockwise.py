"""Blockwise probabilities Pr_{m1,m2}(θ, t) and their Legendre/Fourier projections.

Pr(θ, φ, t) = (1/2π) Σ_{m1,m2} Pr_{m1,m2}(θ, t) e^{i(m1−m2)φ} with
Pr_{m1,m2}(θ, t) = Σ_{J1,J2} ⟨J1 m1|ρ(t)|J2 m2⟩ P̃_{J1}^{m1} P̃_{J2}^{m2}.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ued_tomography.angular.grid import AngularGrid
from ued_tomography.angular.legendre import LegendreTable
from ued_tomography.errors import AliasingError, ResolutionError, ValidationError

BlockKey = tuple[int, int]


@dataclass
class BlockwiseProbability:
    """Pr_{m1,m2} sampled on polar nodes over one revival period.

    Attributes:
        grid: Angular grid; only the polar nodes and weights are used.
        time_nodes: Uniform samples t_k = t_0 + kT/N, ps.
        rotational_constant: B in rad/ps, so that 𝓘 = 1/(2B).
        blocks: (m1, m2) → complex array of shape (n_time, n_theta).
    """

    grid: AngularGrid
    time_nodes: np.ndarray
    rotational_constant: float
    blocks: dict[BlockKey, np.ndarray] = field(default_factory=dict)

    @property
    def inertia(self) -> float:
        return 1.0 / (2.0 * self.rotational_constant)

    @property
    def period(self) -> float:
        return 4.0 * np.pi * self.inertia

    def block(self, m1: int, m2: int) -> np.ndarray:
        if (m1, m2) in self.blocks:
            return self.blocks[(m1, m2)]
        return np.zeros((self.time_nodes.size, self.grid.n_theta), dtype=complex)

    def coherence_sum(self, k: int) -> np.ndarray:
        """Σ_{m1−m2=k} Pr_{m1,m2}."""
        total = np.zeros((self.time_nodes.size, self.grid.n_theta), dtype=complex)
        for (m1, m2), values in self.blocks.items():
            if m1 - m2 == k:
                total += values
        return total

    def like(self, blocks: dict[BlockKey, np.ndarray]) -> BlockwiseProbability:
        return replace(self, blocks=blocks)


def period_time_nodes(rotational_constant: float, n_time: int, start: float = 0.0) -> np.ndarray:
    """n_time uniform samples over one period T = 4π𝓘 = 2π/B, endpoint excluded."""
    period = 2.0 * np.pi / rotational_constant
    return start + period * np.arange(n_time) / n_time


def check_period_sampling(time_nodes: np.ndarray, period: float) -> None:
    n = time_nodes.size
    if n < 1:
        raise ValidationError("time grid is empty")
    expected = time_nodes[0] + period * np.arange(n) / n
    if not np.allclose(time_nodes, expected, rtol=0.0, atol=1e-9 * period):
        raise ValidationError("time grid must cover exactly one period with uniform steps")


def max_resolvable_order(grid: AngularGrid) -> int:
    """Largest α whose nodal spacing π/(2α) is still wider than the grid spacing."""
    widest = float(np.max(np.diff(grid.theta_nodes))) if grid.n_theta > 1 else np.pi
    return int(np.floor(np.pi / (2.0 * widest) + 1e-9))


def project_theta(
    blockwise: BlockwiseProbability,
    alpha: int,
    m1: int,
    m2: int,
    legendre: LegendreTable,
    strict: bool = True,
) -> np.ndarray:
    """I_{m1m2}(α, t) = ∫ sin θ dθ P̃_α^{m1+m2}(cos θ) Pr_{m1,m2}(θ, t).

    With ``strict=False`` a polar grid too coarse for α is used anyway.

    Raises:
        ValidationError: If α < |m1 + m2|.
        ResolutionError: If the polar grid cannot resolve order α, or the
            Legendre table stops below α.
    """
    M = m1 + m2
    if alpha < abs(M):
        raise ValidationError(f"alpha={alpha} below |m1+m2|={abs(M)}")
    limit = max_resolvable_order(blockwise.grid)
    if (strict and alpha > limit) or alpha > legendre.j_max:
        raise ResolutionError(f"order alpha={alpha} not resolvable (grid limit {limit}, table {legendre.j_max})")
    weighted = legendre.get(alpha, M) * blockwise.grid.weights_theta
    return blockwise.block(m1, m2) @ weighted


def time_fourier(
    series: np.ndarray,
    beta: int,
    alpha: int,
    inertia: float,
    time_nodes: np.ndarray,
    strict: bool = True,
) -> complex:
    """(1/T) ∫₀ᵀ I(α, t) e^{iβ(α+1)t/(2𝓘)} dt by the rectangle rule.

    Exact for band-limited input when |β(α+1)| is below the Nyquist limit;
    with ``strict=False`` an aliased harmonic is returned instead of raising.

    Raises:
        AliasingError: If |β(α+1)| exceeds (N − 1)/2 for N samples.
        ValidationError: If the samples do not cover one period uniformly.
    """
    if abs(beta) > alpha:
        raise ValidationError(f"|beta|={abs(beta)} exceeds alpha={alpha}")
    period = 4.0 * np.pi * inertia
    check_period_sampling(time_nodes, period)
    harmonic = beta * (alpha + 1)
    nyquist = (time_nodes.size - 1) // 2
    if strict and abs(harmonic) > nyquist:
        raise AliasingError(f"aliasing: harmonic {harmonic} above Nyquist limit {nyquist}")
    phases = np.exp(1j * harmonic * time_nodes / (2.0 * inertia))
    return complex(np.mean(series * phases))
