"""Tests for tabulated atomic form factors."""

import numpy as np
import pytest

from ued_tomography.diffraction.form_factors import FormFactorEntry, form_factor, load_form_factors
from ued_tomography.errors import SingularMomentumTransferError, ValidationError


class TestXray:
    @pytest.mark.parametrize("element, z", [("H", 1), ("C", 6), ("N", 7), ("O", 8)])
    def test_forward_scattering_counts_electrons(self, element, z):
        """f_X(0) ≈ Z for neutral atoms."""
        assert form_factor(element).xray(0.0) == pytest.approx(z, abs=0.02)

    def test_decreasing(self):
        """f_X falls off with |s|."""
        values = form_factor("N").xray(np.linspace(0.0, 10.0, 50))
        assert np.all(np.diff(values) < 0)


class TestElectron:
    def test_singular_at_origin(self):
        """The Mott–Bethe factor diverges at s = 0."""
        with pytest.raises(SingularMomentumTransferError, match="singular"):
            form_factor("N").electron(np.array([0.0, 1.0]))

    def test_mott_bethe(self):
        """f_e = 2(Z − f_X)/(a₀ s²) stays positive and decreasing."""
        s = np.linspace(0.5, 8.0, 30)
        values = form_factor("C").electron(s)
        assert np.all(values > 0)
        assert np.all(np.diff(values) < 0)

    def test_amplitude_dispatch(self):
        """amplitude() picks the probe; unknown probes are rejected."""
        entry = form_factor("O")
        assert entry.amplitude(2.0, "xray") == pytest.approx(entry.xray(2.0))
        assert entry.amplitude(2.0, "electron") == pytest.approx(entry.electron(2.0))
        with pytest.raises(ValidationError, match="unknown probe"):
            entry.amplitude(2.0, "neutron")


class TestTable:
    def test_unknown_element(self):
        """Elements missing from the table raise ValidationError."""
        with pytest.raises(ValidationError, match="no form factor"):
            form_factor("Xx")

    def test_entry_needs_four_terms(self):
        """Coefficient lists must have four entries."""
        with pytest.raises(ValueError, match="four"):
            FormFactorEntry(atomic_number=1, a=[1.0, 2.0, 3.0], b=[1.0, 2.0, 3.0, 4.0], c=0.0)

    def test_invalid_file(self, tmp_path):
        """A malformed table file raises ValidationError naming the element."""
        path = tmp_path / "bad.yaml"
        path.write_text("Q:\n  atomic_number: 1\n  a: [1.0]\n  b: [1.0]\n  c: 0.0\n")
        with pytest.raises(ValidationError, match="Q"):
            load_form_factors(path)

    def test_custom_file(self, tmp_path):
        """A user table replaces the packaged one."""
        path = tmp_path / "table.yaml"
        path.write_text("X:\n  atomic_number: 2\n  a: [1.0, 0.5, 0.3, 0.2]\n  b: [1.0, 2.0, 3.0, 4.0]\n  c: 0.0\n")
        assert form_factor("X", path).xray(0.0) == pytest.approx(2.0)

    def test_missing_file(self, tmp_path):
        """An unreadable table path raises ValidationError."""
        with pytest.raises(ValidationError, match="cannot read"):
            load_form_factors(tmp_path / "absent.yaml")
