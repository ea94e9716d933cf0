"""Tests for single-mode Wigner functions."""

import numpy as np
import pytest

from ued_tomography.errors import ResolutionError, ValidationError
from ued_tomography.vibrational.oscillator import regular_wavefunctions
from ued_tomography.vibrational.wigner import (
    PhaseSpaceGrid,
    density_from_wigner,
    normalization,
    position_marginal,
    wigner_from_density,
)


@pytest.fixture
def phase_grid() -> PhaseSpaceGrid:
    return PhaseSpaceGrid.for_n_max(2, step=0.1)


class TestWigner:
    def test_vacuum(self, phase_grid):
        """The ground state is a unit Gaussian peaking at 1/π."""
        wigner = wigner_from_density(np.diag([1.0, 0.0, 0.0]), phase_grid)
        assert normalization(wigner, phase_grid) == pytest.approx(1.0, abs=1e-8)
        assert wigner.max() == pytest.approx(1.0 / np.pi)

    def test_first_excited_negative_at_origin(self, phase_grid):
        """W of |1⟩ equals −1/π at the origin."""
        wigner = wigner_from_density(np.diag([0.0, 1.0, 0.0]), phase_grid)
        centre = phase_grid.q.size // 2
        assert wigner[centre, centre] == pytest.approx(-1.0 / np.pi)

    def test_roundtrip(self, phase_grid):
        """ρ → W → ρ recovers the matrix."""
        rng = np.random.default_rng(2)
        factor = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        rho = factor @ factor.conj().T
        rho /= np.trace(rho).real
        recovered = density_from_wigner(wigner_from_density(rho, phase_grid), 2, phase_grid)
        np.testing.assert_allclose(recovered, rho, atol=1e-6)

    def test_position_marginal(self, phase_grid):
        """∫ W dp of |1⟩ is φ₁²."""
        wigner = wigner_from_density(np.diag([0.0, 1.0, 0.0]), phase_grid)
        phi, _ = regular_wavefunctions(1, phase_grid.q)
        np.testing.assert_allclose(position_marginal(wigner, phase_grid), phi[1] ** 2, atol=1e-8)

    def test_momentum_mean(self, phase_grid):
        """(|0⟩ + i|1⟩)/√2 has ⟨p⟩ = 1/√2."""
        psi = np.array([1.0, 1j, 0.0]) / np.sqrt(2.0)
        wigner = wigner_from_density(np.outer(psi, psi.conj()), phase_grid)
        mean_p = float(np.sum(wigner * phase_grid.p[None, :]) * phase_grid.cell)
        assert mean_p == pytest.approx(1.0 / np.sqrt(2.0), abs=1e-8)

    def test_extent_checked(self):
        """A grid that clips the basis functions is refused."""
        narrow = PhaseSpaceGrid.symmetric(3.0, 61)
        with pytest.raises(ResolutionError, match="must cover"):
            density_from_wigner(np.zeros((61, 61)), 2, narrow)

    def test_shapes_checked(self, phase_grid):
        with pytest.raises(ValidationError, match="square"):
            wigner_from_density(np.zeros((2, 3)), phase_grid)
        with pytest.raises(ValidationError, match="does not match grid"):
            density_from_wigner(np.zeros((5, 5)), 2, phase_grid)

    def test_grid_spacing(self, phase_grid):
        """The grid is centred with the requested spacing."""
        assert phase_grid.q[phase_grid.q.size // 2] == pytest.approx(0.0, abs=1e-12)
        assert phase_grid.cell == pytest.approx(0.01)
