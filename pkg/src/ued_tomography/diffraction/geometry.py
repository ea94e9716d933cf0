"""Scattering and molecular geometry.

Lab frame: the probe travels along +x, the alignment laser is polarized
along z.  A detector node (Θ, Φ) has scattering angle Θ from the beam and
azimuth Φ measured from z, so that

    k_out = k (cos Θ, sin Θ sin Φ, sin Θ cos Φ),   s = k_out − k_in.

Molecular orientation (θ, φ) is the lab direction of the molecular z axis;
the molecule is rotated by R = R_z(φ) R_y(θ).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Literal

import numpy as np
from scipy import constants

from ued_tomography.config.pipeline import DetectorConfig, MoleculeConfig
from ued_tomography.diffraction.form_factors import AtomicFormFactor, form_factor
from ued_tomography.errors import ValidationError

Probe = Literal["xray", "electron"]

# hc in keV·Å
HC_KEV_ANGSTROM = constants.h * constants.c / (constants.e * 1e3) * 1e10
ELECTRON_REST_ENERGY_KEV = constants.physical_constants["electron mass energy equivalent in MeV"][0] * 1e3


def probe_wavelength(probe: Probe, energy_kev: float) -> float:
    """De Broglie or photon wavelength in Å; relativistic for electrons."""
    if energy_kev <= 0:
        raise ValidationError("probe energy must be positive")
    if probe == "xray":
        return HC_KEV_ANGSTROM / energy_kev
    if probe == "electron":
        return HC_KEV_ANGSTROM / np.sqrt(energy_kev * (energy_kev + 2.0 * ELECTRON_REST_ENERGY_KEV))
    raise ValidationError(f"unknown probe {probe!r}")


@dataclass(frozen=True)
class ScatteringGeometry:
    """Detector nodes in scattering angles.

    Attributes:
        scattering_angles: Θ per pixel, radians.
        azimuths: Φ per pixel, radians.
        probe: ``"xray"`` or ``"electron"``.
        probe_energy_kev: Photon or electron kinetic energy.
        mask: True for pixels used in inversion; None keeps all.
        shape: Detector shape for reshaping frames into images.
    """

    scattering_angles: np.ndarray
    azimuths: np.ndarray
    probe: Probe = "xray"
    probe_energy_kev: float = 20.0
    mask: np.ndarray | None = None
    shape: tuple[int, ...] | None = field(default=None)

    def __post_init__(self) -> None:
        if self.scattering_angles.shape != self.azimuths.shape or self.scattering_angles.ndim != 1:
            raise ValidationError("scattering angles and azimuths must be 1-D arrays of equal length")
        if self.mask is not None and self.mask.shape != self.scattering_angles.shape:
            raise ValidationError("mask must have one entry per pixel")
        nodes = np.round(np.column_stack([self.scattering_angles, np.mod(self.azimuths, 2 * np.pi)]), 12)
        if np.unique(nodes, axis=0).shape[0] != nodes.shape[0]:
            raise ValidationError("detector nodes must be unique")
        probe_wavelength(self.probe, self.probe_energy_kev)

    @property
    def n_pixels(self) -> int:
        return self.scattering_angles.size

    @property
    def wavelength(self) -> float:
        return probe_wavelength(self.probe, self.probe_energy_kev)

    @property
    def wavenumber(self) -> float:
        """k = 2π/λ in Å⁻¹."""
        return 2.0 * np.pi / self.wavelength

    def momentum_transfer(self) -> np.ndarray:
        """s vectors of shape (n_pixels, 3) in Å⁻¹."""
        k = self.wavenumber
        theta, phi = self.scattering_angles, self.azimuths
        return k * np.column_stack([np.cos(theta) - 1.0, np.sin(theta) * np.sin(phi), np.sin(theta) * np.cos(phi)])

    def s_magnitude(self) -> np.ndarray:
        return 2.0 * self.wavenumber * np.sin(self.scattering_angles / 2.0)

    def kept_rows(self) -> np.ndarray:
        if self.mask is None:
            return np.arange(self.n_pixels)
        return np.flatnonzero(self.mask)

    def with_beam_stop(self, radius: float) -> ScatteringGeometry:
        """Mask every pixel with |s| below ``radius`` (Å⁻¹)."""
        if radius <= 0:
            return self
        keep = self.s_magnitude() >= radius
        if self.mask is not None:
            keep &= self.mask
        return replace(self, mask=keep)

    @classmethod
    def from_angles(
        cls,
        scattering_angles: np.ndarray,
        azimuths: np.ndarray,
        probe: Probe = "xray",
        probe_energy_kev: float = 20.0,
    ) -> ScatteringGeometry:
        """Product grid of Θ and Φ nodes, Φ fastest."""
        theta, phi = np.meshgrid(np.asarray(scattering_angles), np.asarray(azimuths), indexing="ij")
        return cls(
            scattering_angles=theta.ravel(),
            azimuths=phi.ravel(),
            probe=probe,
            probe_energy_kev=probe_energy_kev,
            shape=theta.shape,
        )

    @classmethod
    def flat_detector(
        cls,
        n_pixels: int,
        s_max: float,
        probe: Probe = "xray",
        probe_energy_kev: float = 20.0,
        beam_stop_radius: float = 0.0,
    ) -> ScatteringGeometry:
        """Square detector of ``n_pixels``² cells spanning |s_y|, |s_z| ≤ ``s_max``.

        Pixel centers are placed in the (s_y, s_z) plane and mapped to
        Θ = 2 arcsin(|s|/2k), Φ = atan2(s_y, s_z).
        """
        if n_pixels < 1 or s_max <= 0:
            raise ValidationError("detector needs at least one pixel and a positive extent")
        k = 2.0 * np.pi / probe_wavelength(probe, probe_energy_kev)
        step = 2.0 * s_max / n_pixels
        centers = -s_max + step * (np.arange(n_pixels) + 0.5)
        s_z, s_y = np.meshgrid(centers, centers, indexing="ij")
        magnitude = np.hypot(s_y, s_z).ravel()
        if np.any(magnitude > 2.0 * k):
            raise ValidationError(f"s_max={s_max} exceeds the Ewald limit 2k={2 * k:.3f} for this probe")
        geometry = cls(
            scattering_angles=2.0 * np.arcsin(magnitude / (2.0 * k)),
            azimuths=np.arctan2(s_y, s_z).ravel(),
            probe=probe,
            probe_energy_kev=probe_energy_kev,
            shape=(n_pixels, n_pixels),
        )
        return geometry.with_beam_stop(beam_stop_radius)

    @classmethod
    def from_config(cls, config: DetectorConfig) -> ScatteringGeometry:
        return cls.flat_detector(
            n_pixels=config.n_pixels,
            s_max=config.s_max_inv_angstrom,
            probe=config.probe,
            probe_energy_kev=config.probe_energy_kev,
            beam_stop_radius=config.beam_stop_radius_inv_angstrom,
        )


def orientation_matrices(theta: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """R_z(φ) R_y(θ) for each orientation, shape (n, 3, 3)."""
    theta, phi = np.broadcast_arrays(np.atleast_1d(theta), np.atleast_1d(phi))
    ct, st, cp, sp = np.cos(theta), np.sin(theta), np.cos(phi), np.sin(phi)
    zero = np.zeros_like(ct)
    return np.stack(
        [
            np.stack([cp * ct, -sp, cp * st], axis=-1),
            np.stack([sp * ct, cp, sp * st], axis=-1),
            np.stack([-st, zero, ct], axis=-1),
        ],
        axis=-2,
    )


@dataclass(frozen=True)
class MoleculeGeometry:
    """Atoms in the molecular frame, molecular axis along z.

    Attributes:
        elements: Element symbol per atom.
        positions: Å, shape (n_atoms, 3).
        form_factors: Coefficients per distinct element.
    """

    elements: tuple[str, ...]
    positions: np.ndarray
    form_factors: dict[str, AtomicFormFactor]

    def __post_init__(self) -> None:
        if not self.elements:
            raise ValidationError("molecule needs at least one atom")
        if self.positions.shape != (len(self.elements), 3):
            raise ValidationError(f"positions must have shape ({len(self.elements)}, 3)")
        missing = set(self.elements) - set(self.form_factors)
        if missing:
            raise ValidationError(f"no form factors for {sorted(missing)}")

    @classmethod
    def from_atoms(
        cls,
        atoms: list[tuple[str, tuple[float, float, float]]],
        table: Path | None = None,
    ) -> MoleculeGeometry:
        elements = tuple(element for element, _ in atoms)
        positions = np.array([position for _, position in atoms], dtype=float)
        return cls(
            elements=elements,
            positions=positions,
            form_factors={element: form_factor(element, table) for element in set(elements)},
        )

    @classmethod
    def from_config(cls, config: MoleculeConfig, table: Path | None = None) -> MoleculeGeometry:
        return cls.from_atoms([(atom.element, atom.position_angstrom) for atom in config.atoms], table)

    @property
    def atomic_numbers(self) -> np.ndarray:
        return np.array([self.form_factors[e].atomic_number for e in self.elements])

    def atomic_amplitudes(self, s_magnitude: np.ndarray, probe: Probe) -> np.ndarray:
        """Per-atom scattering amplitude, shape (n_atoms, n_s)."""
        s_magnitude = np.asarray(s_magnitude, dtype=float)
        cache = {e: self.form_factors[e].amplitude(s_magnitude, probe) for e in set(self.elements)}
        return np.stack([cache[e] for e in self.elements])

    def rotated_positions(self, theta: np.ndarray, phi: np.ndarray) -> np.ndarray:
        """Lab positions for each orientation, shape (n_orientations, n_atoms, 3)."""
        return np.einsum("cij,aj->cai", orientation_matrices(theta, phi), self.positions)
