"""Single-mode Wigner functions in the Fock basis.

Uses the iterative recursion for the Wigner functions of the operators
|m⟩⟨n| with ħ = 1, α = (q + ip)/√2:

    W₀₀ = e^{−2|α|²}/π,   W₀ₙ = 2α W₀,ₙ₋₁ / √n,
    W_mm = (2α* W_{m−1,m} − √m W_{m−1,m−1}) / √m,
    W_mn = (2α W_{m,n−1} − √m W_{m−1,n−1}) / √n   (n > m),
    W_nm = conj(W_mn).

W_ρ = Σ ρ_mn W_mn and, by the overlap identity Tr(AB) = 2π ∬ W_A W_B,
ρ_mn = 2π ∬ W_ρ conj(W_mn) dq dp.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ued_tomography.errors import ResolutionError, ValidationError

EXTENT_MARGIN = 4.0


@dataclass(frozen=True)
class PhaseSpaceGrid:
    """Uniform q and p axes."""

    q: np.ndarray
    p: np.ndarray

    @classmethod
    def symmetric(cls, half_width: float, n_points: int) -> PhaseSpaceGrid:
        axis = np.linspace(-half_width, half_width, n_points)
        return cls(q=axis, p=axis.copy())

    @classmethod
    def for_n_max(cls, n_max: int, step: float = 0.05) -> PhaseSpaceGrid:
        """Grid covering ±(√(2n_max+1) + 4) at spacing ``step``."""
        half = np.sqrt(2 * n_max + 1) + EXTENT_MARGIN
        n = 2 * int(np.ceil(half / step)) + 1
        return cls.symmetric(step * (n // 2), n)

    @property
    def cell(self) -> float:
        return float((self.q[1] - self.q[0]) * (self.p[1] - self.p[0]))

    def check_extent(self, n_max: int) -> None:
        need = np.sqrt(2 * n_max + 1) + EXTENT_MARGIN
        for name, axis in (("q", self.q), ("p", self.p)):
            if axis.size < 2 or axis.min() > -need or axis.max() < need:
                raise ResolutionError(f"{name} grid must cover ±{need:.2f} for n_max={n_max}")


def wigner_basis(n_max: int, grid: PhaseSpaceGrid) -> np.ndarray:
    """W_mn(q, p) for m, n ≤ n_max, shape (n_max+1, n_max+1, n_q, n_p)."""
    alpha = (grid.q[:, None] + 1j * grid.p[None, :]) / np.sqrt(2.0)
    size = n_max + 1
    w = np.zeros((size, size) + alpha.shape, dtype=complex)
    w[0, 0] = np.exp(-2.0 * np.abs(alpha) ** 2) / np.pi
    for n in range(1, size):
        w[0, n] = 2.0 * alpha * w[0, n - 1] / np.sqrt(n)
    for m in range(1, size):
        w[m, m] = (2.0 * np.conj(alpha) * w[m - 1, m] - np.sqrt(m) * w[m - 1, m - 1]) / np.sqrt(m)
        for n in range(m + 1, size):
            w[m, n] = (2.0 * alpha * w[m, n - 1] - np.sqrt(m) * w[m - 1, n - 1]) / np.sqrt(n)
    for m in range(size):
        for n in range(m):
            w[m, n] = np.conj(w[n, m])
    return w


def wigner_from_density(rho: np.ndarray, grid: PhaseSpaceGrid) -> np.ndarray:
    """Real W_ρ(q, p) of a single-mode density matrix."""
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValidationError(f"density matrix must be square, got {rho.shape}")
    basis = wigner_basis(rho.shape[0] - 1, grid)
    return np.einsum("mn,mnqp->qp", rho, basis).real


def density_from_wigner(wigner: np.ndarray, n_max: int, grid: PhaseSpaceGrid) -> np.ndarray:
    """ρ_mn = 2π ∬ W conj(W_mn) dq dp by the rectangle rule.

    Raises:
        ResolutionError: If the grid truncates the basis functions.
    """
    grid.check_extent(n_max)
    if wigner.shape != (grid.q.size, grid.p.size):
        raise ValidationError(f"Wigner shape {wigner.shape} does not match grid")
    basis = wigner_basis(n_max, grid)
    return 2.0 * np.pi * grid.cell * np.einsum("qp,mnqp->mn", wigner, basis.conj())


def position_marginal(wigner: np.ndarray, grid: PhaseSpaceGrid) -> np.ndarray:
    """∫ W dp, the position probability on ``grid.q``."""
    return wigner.sum(axis=1) * (grid.p[1] - grid.p[0])


def normalization(wigner: np.ndarray, grid: PhaseSpaceGrid) -> float:
    return float(wigner.sum() * grid.cell)
