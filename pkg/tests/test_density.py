"""Tests for the block-sparse rotational density matrix."""

import numpy as np
import pytest

from ued_tomography.errors import ValidationError
from ued_tomography.rotor.density import RotationalDensityMatrix, diagonal_keys, rotor_energies
from ued_tomography.tomography.iterative import random_density


class TestLayout:
    def test_zeros_block_shapes(self):
        """Block (m1, m2) spans J1 = |m1|..j_max by J2 = |m2|..j_max."""
        rho = RotationalDensityMatrix.zeros(3, keys=[(0, 0), (2, -1)])
        assert rho.block(0, 0).shape == (4, 4)
        assert rho.block(2, -1).shape == (2, 3)
        assert rho.keys == [(0, 0), (2, -1)]

    def test_wrong_block_shape_rejected(self):
        """Blocks that do not match the basis raise ValidationError."""
        with pytest.raises(ValidationError, match="expected"):
            RotationalDensityMatrix(j_max=2, blocks={(1, 1): np.zeros((3, 3), dtype=complex)})

    def test_missing_block_reads_as_zero(self):
        """Absent blocks and out-of-range elements are zero."""
        rho = RotationalDensityMatrix.zeros(2)
        assert not np.any(rho.block(1, 0))
        assert rho.element(3, 0, 0, 0) == 0j
        assert rho.element(0, 1, 1, 1) == 0j

    def test_dense_roundtrip(self):
        """to_dense / from_dense preserve every stored block."""
        rho = random_density(3, [(m1, m2) for m1 in range(-1, 2) for m2 in range(-1, 2)], 1.0, seed=4)
        back = rho.from_dense(rho.to_dense())
        for key in rho.keys:
            np.testing.assert_array_equal(back.block(*key), rho.block(*key))
        assert rho.to_dense().shape == (rho.dimension, rho.dimension)
        assert len(rho.basis()) == 16

    def test_copy_is_independent(self):
        """Editing a copy leaves the original untouched."""
        rho = RotationalDensityMatrix.zeros(1)
        other = rho.copy()
        other.blocks[(0, 0)][0, 0] = 1.0
        assert rho.element(0, 0, 0, 0) == 0j


class TestEvolution:
    def test_energies(self):
        """E_J = B J(J+1) − D J²(J+1)²."""
        np.testing.assert_allclose(rotor_energies(3, 2.0, 0.1), [0.0, 4.0 - 0.4, 12.0 - 3.6, 24.0 - 14.4])

    def test_phases(self, trial_state):
        """ρ_{J1 J2}(t) = ρ_{J1 J2} e^{−iB(J1(J1+1) − J2(J2+1))t}."""
        evolved = trial_state.evolve(0.3)
        expected = trial_state.element(2, 0, 0, 0) * np.exp(-1j * 6.0 * 0.3)
        assert evolved.element(2, 0, 0, 0) == pytest.approx(expected)
        assert evolved.reference_time == 0.3

    def test_period_returns_state(self, trial_state):
        """After T = 2π/B every element returns to its initial value."""
        evolved = trial_state.evolve(2.0 * np.pi)
        for key in trial_state.keys:
            np.testing.assert_allclose(evolved.block(*key), trial_state.block(*key), atol=1e-12)

    def test_partial_traces_time_invariant(self, trial_state):
        """Partial traces over (m, J parity) do not change under free evolution."""
        before = trial_state.partial_traces()
        after = trial_state.evolve(1.234).partial_traces()
        for key, value in before.items():
            assert after[key] == pytest.approx(value, abs=1e-12)


class TestProperties:
    def test_trial_state_properties(self, trial_state):
        """The trial state is a unit-trace positive Hermitian matrix."""
        assert trial_state.trace() == pytest.approx(1.0)
        assert trial_state.hermiticity_error() < 1e-15
        assert trial_state.eigenvalues().min() > -1e-12

    def test_partial_trace_classes(self, trial_state):
        """Partial traces cover every (m, parity) class and sum to the trace."""
        traces = trial_state.partial_traces()
        assert len(traces) == 2 * (2 * trial_state.j_max + 1)
        assert sum(traces.values()) == pytest.approx(trial_state.trace())

    def test_diagonal_keys(self):
        """The Δm = 0 pattern lists every m once."""
        assert diagonal_keys(1) == [(-1, -1), (0, 0), (1, 1)]
