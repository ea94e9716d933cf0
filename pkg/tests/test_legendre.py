"""Tests for normalized associated Legendre functions."""

import numpy as np
import pytest

from ued_tomography.angular.grid import make_grid
from ued_tomography.angular.legendre import (
    MAX_BASIS_ORDER,
    evaluate_legendre,
    normalized_legendre,
    spherical_harmonic,
)
from ued_tomography.errors import BasisOrderError


class TestClosedForms:
    def test_low_orders(self):
        """P̃_0^0, P̃_1^0, P̃_1^1 and P̃_2^0 against their closed forms."""
        x = np.linspace(-1.0, 1.0, 7)
        values = normalized_legendre(2, x)
        sin_t = np.sqrt(1.0 - x * x)
        np.testing.assert_allclose(values[0, 2], 1.0 / np.sqrt(2.0))
        np.testing.assert_allclose(values[1, 2], np.sqrt(1.5) * x)
        np.testing.assert_allclose(values[1, 3], -np.sqrt(3.0) / 2.0 * sin_t, atol=1e-15)
        np.testing.assert_allclose(values[2, 2], np.sqrt(2.5) * (3.0 * x * x - 1.0) / 2.0)

    def test_negative_m_parity(self):
        """P̃_J^{−m} = (−1)^m P̃_J^m."""
        x = np.linspace(-0.9, 0.9, 5)
        values = normalized_legendre(5, x)
        for J in range(6):
            for m in range(1, J + 1):
                np.testing.assert_allclose(values[J, 5 - m], (-1) ** m * values[J, 5 + m])

    def test_entries_beyond_degree_are_zero(self):
        """|m| > J entries are zero."""
        values = normalized_legendre(3, np.array([0.3]))
        assert values[1, 3 + 2, 0] == 0.0
        assert values[0, 3 - 1, 0] == 0.0


class TestOrthonormality:
    def test_orthonormal_on_gauss_grid(self):
        """∫ P̃_{J1}^m P̃_{J2}^m dx = δ to 1e−8 for J ≤ 8."""
        grid = make_grid(20, 1)
        table = evaluate_legendre(8, grid)
        for m in range(-8, 9):
            block = table.block(m)
            gram = (block * grid.weights_theta) @ block.T
            np.testing.assert_allclose(gram, np.eye(block.shape[0]), atol=1e-8)

    def test_spherical_harmonic_normalization(self):
        """Y_10 = √(3/4π) cos θ and ∬|Y_21|² dΩ = 1."""
        theta = np.array([0.2, 1.0, 2.5])
        np.testing.assert_allclose(spherical_harmonic(1, 0, theta, 0.0), np.sqrt(3.0 / (4.0 * np.pi)) * np.cos(theta))

        grid = make_grid(10, 8)
        theta, phi = np.meshgrid(grid.theta_nodes, grid.phi_nodes)
        y = spherical_harmonic(2, 1, theta, phi)
        weights = np.outer(grid.weights_phi, grid.weights_theta)
        assert np.sum(weights * np.abs(y) ** 2) == pytest.approx(1.0, abs=1e-12)

    def test_high_order_stays_finite(self):
        """The normalized recurrence evaluates order 200 without overflow."""
        values = normalized_legendre(200, np.linspace(-0.99, 0.99, 11))
        assert np.all(np.isfinite(values))


class TestTable:
    def test_get_and_block(self):
        """get() returns zeros outside the table; block() stacks J = |m| .. j_max."""
        grid = make_grid(6, 2)
        table = evaluate_legendre(4, grid)
        assert table.block(-2).shape == (3, 6)
        assert table.block(1, j_max=2).shape == (2, 6)
        np.testing.assert_array_equal(table.get(1, 2), np.zeros(6))
        np.testing.assert_array_equal(table.get(5, 0), np.zeros(6))
        np.testing.assert_allclose(table.get(3, -1), table.values[3, 3])


class TestBasisOrder:
    def test_negative_order(self):
        """Negative j_max is rejected."""
        with pytest.raises(BasisOrderError):
            normalized_legendre(-1, np.zeros(2))

    def test_order_too_large(self):
        """Orders above the evaluable limit raise BasisOrderError."""
        with pytest.raises(BasisOrderError, match="too large"):
            normalized_legendre(MAX_BASIS_ORDER + 1, np.zeros(2))
