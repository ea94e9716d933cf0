"""Tests for orientation probability synthesis."""

import numpy as np
import pytest

from ued_tomography.angular.grid import make_grid
from ued_tomography.angular.legendre import evaluate_legendre
from ued_tomography.errors import ValidationError
from ued_tomography.rotor.alignment import cos2_expectation
from ued_tomography.rotor.synthesis import (
    AngularDistribution,
    azimuthal_components,
    cos2_from_distribution,
    synthesize_blockwise,
    synthesize_probability,
)


class TestSynthesis:
    def test_normalized_at_every_time(self, trial_state, grid):
        """∬ Pr dΩ equals the trace at every sample time."""
        times = np.linspace(0.0, 2.0 * np.pi, 9)
        distribution = synthesize_probability(trial_state, grid, times)
        np.testing.assert_allclose(distribution.norms(), 1.0, atol=1e-12)

    def test_nonnegative(self, trial_state, grid):
        """A positive density matrix gives a nonnegative distribution."""
        distribution = synthesize_probability(trial_state, grid, np.linspace(0.0, 3.0, 5))
        assert distribution.values.min() > -1e-12

    def test_azimuthal_component_matches_blocks(self, trial_state, grid):
        """∫ Pr e^{−ikφ} dφ equals the sum of blocks with m1 − m2 = k."""
        times = np.linspace(0.0, 1.0, 4)
        blockwise = synthesize_blockwise(trial_state, grid, times)
        distribution = synthesize_probability(trial_state, grid, times)
        np.testing.assert_allclose(azimuthal_components(distribution, 0), blockwise.coherence_sum(0), atol=1e-12)

    def test_cos2_matches_matrix_elements(self, trial_state, grid):
        """Quadrature ⟨cos²θ⟩ agrees with the matrix-element expectation."""
        times = np.linspace(0.0, 2.0, 6)
        distribution = synthesize_probability(trial_state, grid, times)
        expected = cos2_expectation(trial_state, times)
        np.testing.assert_allclose(cos2_from_distribution(distribution), expected, atol=1e-10)

    def test_explicit_table_matches_default(self, trial_state, grid, legendre):
        """Passing a larger Legendre table gives the same result."""
        times = np.array([0.0, 0.7])
        a = synthesize_probability(trial_state, grid, times)
        b = synthesize_probability(trial_state, grid, times, legendre)
        np.testing.assert_allclose(a.values, b.values, atol=1e-14)

    def test_table_too_small(self, trial_state, grid):
        """A Legendre table below the basis order is rejected."""
        with pytest.raises(ValidationError, match="Legendre table"):
            synthesize_probability(trial_state, grid, np.array([0.0]), evaluate_legendre(2, grid))

    def test_table_on_other_grid(self, trial_state, grid):
        """A Legendre table from another grid is rejected."""
        with pytest.raises(ValidationError):
            synthesize_probability(trial_state, grid, np.array([0.0]), evaluate_legendre(8, make_grid(10, 8)))


class TestAngularDistribution:
    def test_shape_checked(self, grid):
        """Values must be (n_time, n_phi, n_theta)."""
        with pytest.raises(ValidationError, match="shape"):
            AngularDistribution(grid=grid, time_nodes=np.zeros(2), values=np.zeros((2, grid.n_theta, grid.n_phi)))

    def test_vector_roundtrip(self, trial_state, grid):
        """as_vectors / from_vectors keep θ fastest within φ."""
        distribution = synthesize_probability(trial_state, grid, np.array([0.0, 1.0]))
        vectors = distribution.as_vectors()
        assert vectors.shape == (2, grid.n_phi * grid.n_theta)
        np.testing.assert_array_equal(vectors[0, : grid.n_theta], distribution.values[0, 0])
        back = AngularDistribution.from_vectors(grid, distribution.time_nodes, vectors)
        np.testing.assert_array_equal(back.values, distribution.values)
