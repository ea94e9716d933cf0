"""Tests for rotor parameters, thermal ensembles and cos²θ elements."""

from dataclasses import replace

import numpy as np
import pytest

from ued_tomography.config.pipeline import RotorConfig
from ued_tomography.errors import JMaxTooSmallError, ValidationError
from ued_tomography.rotor.model import (
    KELVIN_TO_RAD_PER_PS,
    WAVENUMBER_TO_RAD_PER_PS,
    RotorSpec,
    cos2_matrix,
    cos2theta_element,
    thermal_density,
    thermal_weights,
)


class TestRotorSpec:
    def test_period_and_inertia(self, n2_spec):
        """T = 2π/B and 𝓘 = 1/(2B) in ħ = 1 units."""
        B = n2_spec.rotational_constant
        assert n2_spec.period == pytest.approx(2.0 * np.pi / B)
        assert n2_spec.inertia == pytest.approx(0.5 / B)

    def test_nitrogen_revival_period(self, n2_spec):
        """B = 1.99 cm⁻¹ repeats every 16.8 ps; the half period is the 8.4 ps revival."""
        assert n2_spec.period == pytest.approx(16.76, rel=1e-2)

    def test_from_moment_of_inertia(self):
        """B[cm⁻¹] ≈ 16.8576 / I[amu·Å²]."""
        spec = RotorSpec.from_moment_of_inertia(16.8576 / 1.99)
        assert spec.rotational_constant / WAVENUMBER_TO_RAD_PER_PS == pytest.approx(1.99, rel=1e-3)

    def test_invalid_parameters(self):
        """Nonpositive B and negative temperature are rejected."""
        with pytest.raises(ValidationError):
            RotorSpec(rotational_constant=0.0)
        with pytest.raises(ValidationError):
            RotorSpec(rotational_constant=1.0, temperature=-1.0)
        with pytest.raises(ValidationError):
            RotorSpec.from_moment_of_inertia(0.0)

    def test_spin_weights_by_parity(self, n2_spec):
        """Even J take the even weight, odd J the odd one."""
        np.testing.assert_array_equal(n2_spec.spin_weight(np.arange(4)), [6.0, 3.0, 6.0, 3.0])


class TestThermalWeights:
    def test_normalized(self, n2_spec):
        """Σ (2J+1) ω_J = 1 after truncation."""
        weights = thermal_weights(n2_spec, 12)
        J = np.arange(13)
        assert np.sum((2 * J + 1) * weights) == pytest.approx(1.0, abs=1e-14)

    def test_truncation_too_small(self, n2_spec):
        """A heavy Boltzmann tail beyond j_max raises JMaxTooSmallError."""
        with pytest.raises(JMaxTooSmallError, match="j_max too small"):
            thermal_weights(n2_spec, 3)

    def test_zero_temperature_ground_level(self):
        """At 0 K only the lowest spin-allowed level is populated."""
        spec = RotorSpec(rotational_constant=1.0, spin_weight_even=0.0, spin_weight_odd=1.0)
        weights = thermal_weights(spec, 4)
        np.testing.assert_allclose(weights, [0.0, 1.0 / 3.0, 0.0, 0.0, 0.0])

    def test_spin_statistics_ratio(self, n2_spec):
        """Adjacent even/odd populations carry the 2:1 nuclear spin ratio."""
        weights = thermal_weights(n2_spec, 12)
        kt_ratio = weights[1] / weights[0]
        boltzmann = np.exp(-2.0 * n2_spec.rotational_constant / (30.0 * KELVIN_TO_RAD_PER_PS))
        assert kt_ratio == pytest.approx(0.5 * boltzmann, rel=1e-3)

    def test_thermal_density(self, n2_spec):
        """The thermal matrix is diagonal, unit trace and positive."""
        rho = thermal_density(n2_spec, 12)
        assert rho.keys == [(m, m) for m in range(-12, 13)]
        assert rho.trace() == pytest.approx(1.0)
        assert rho.hermiticity_error() == 0.0
        assert rho.eigenvalues().min() >= -1e-15

    def test_from_config(self):
        """Config units convert to rad/ps."""
        spec = RotorSpec.from_config(RotorConfig(rotational_constant_cm=2.0, temperature_k=10.0))
        assert spec.rotational_constant == pytest.approx(2.0 * WAVENUMBER_TO_RAD_PER_PS)
        assert replace(spec, temperature=0.0).temperature == 0.0


class TestCos2Elements:
    @pytest.mark.parametrize(
        "J1, J2, m, expected",
        [
            (0, 0, 0, 1.0 / 3.0),
            (1, 1, 0, 3.0 / 5.0),
            (1, 1, 1, 1.0 / 5.0),
            (2, 0, 0, 2.0 / (3.0 * np.sqrt(5.0))),
            (3, 1, 0, 0.0 + 2.0 * np.sqrt(3.0) / (5.0 * np.sqrt(7.0))),
        ],
    )
    def test_known_elements(self, J1, J2, m, expected):
        """Closed-form ⟨J1 m|cos²θ|J2 m⟩ values."""
        assert cos2theta_element(J1, J2, m) == pytest.approx(expected, abs=1e-12)

    def test_diagonal_formula(self):
        """⟨J m|cos²θ|J m⟩ = 1/3 + (2/3)(J(J+1) − 3m²)/((2J−1)(2J+3))."""
        for J in range(1, 8):
            for m in range(-J, J + 1):
                expected = 1.0 / 3.0 + 2.0 / 3.0 * (J * (J + 1) - 3 * m * m) / ((2 * J - 1) * (2 * J + 3))
                assert cos2theta_element(J, J, m) == pytest.approx(expected, abs=1e-12)

    def test_selection_rules(self):
        """Only ΔJ = 0, ±2 couple."""
        assert cos2theta_element(3, 2, 0) == 0.0
        assert cos2theta_element(5, 1, 0) == 0.0

    def test_matrix_symmetric_and_traced(self):
        """Σ_m Tr C_m over a full J shell equals (2J+1)/3."""
        matrix = cos2_matrix(1, 6)
        np.testing.assert_allclose(matrix, matrix.T)
        shell = sum(cos2theta_element(4, 4, m) for m in range(-4, 5))
        assert shell == pytest.approx(3.0)
