"""Linear rigid rotor: parameters, thermal ensembles and cos²θ matrix elements.

Internal units are ħ = 1 with time in picoseconds, so energies and the
rotational constant are angular frequencies in rad/ps.  Conversions from
spectroscopic units happen here and nowhere else.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import structlog
from scipy import constants

from ued_tomography.angular.coupling import clebsch_gordan
from ued_tomography.config.pipeline import RotorConfig
from ued_tomography.errors import JMaxTooSmallError, ValidationError
from ued_tomography.rotor.density import RotationalDensityMatrix, rotor_energies

logger = structlog.get_logger()

PS = 1e-12
# 1 cm⁻¹ as an angular frequency in rad/ps
WAVENUMBER_TO_RAD_PER_PS = 2.0 * np.pi * constants.c * 100.0 * PS
# k_B T/ħ per kelvin in rad/ps
KELVIN_TO_RAD_PER_PS = constants.k / constants.hbar * PS


@dataclass(frozen=True)
class RotorSpec:
    """Linear rotor with anisotropic polarizability.

    Attributes:
        rotational_constant: B in rad/ps (E_J = B J(J+1)).
        alpha_parallel: Polarizability volume along the axis, Å³.
        alpha_perp: Polarizability volume perpendicular to the axis, Å³.
        spin_weight_even: Nuclear spin statistical weight for even J.
        spin_weight_odd: Nuclear spin statistical weight for odd J.
        temperature: Kelvin.
        centrifugal_distortion: D in rad/ps.
    """

    rotational_constant: float
    alpha_parallel: float = 0.0
    alpha_perp: float = 0.0
    spin_weight_even: float = 1.0
    spin_weight_odd: float = 1.0
    temperature: float = 0.0
    centrifugal_distortion: float = 0.0

    def __post_init__(self) -> None:
        if self.rotational_constant <= 0:
            raise ValidationError("rotational constant must be positive")
        if self.temperature < 0:
            raise ValidationError("temperature must be nonnegative")
        if self.spin_weight_even < 0 or self.spin_weight_odd < 0:
            raise ValidationError("spin weights must be nonnegative")

    @classmethod
    def from_config(cls, config: RotorConfig) -> RotorSpec:
        return cls(
            rotational_constant=config.rotational_constant_cm * WAVENUMBER_TO_RAD_PER_PS,
            alpha_parallel=config.alpha_parallel_a3,
            alpha_perp=config.alpha_perp_a3,
            spin_weight_even=config.spin_weight_even,
            spin_weight_odd=config.spin_weight_odd,
            temperature=config.temperature_k,
            centrifugal_distortion=config.centrifugal_distortion_cm * WAVENUMBER_TO_RAD_PER_PS,
        )

    @classmethod
    def from_moment_of_inertia(cls, inertia_amu_a2: float, **kwargs: float) -> RotorSpec:
        """Build from a moment of inertia in amu·Å²."""
        if inertia_amu_a2 <= 0:
            raise ValidationError("moment of inertia must be positive")
        inertia_si = inertia_amu_a2 * constants.atomic_mass * 1e-20
        return cls(rotational_constant=constants.hbar / (2.0 * inertia_si) * PS, **kwargs)

    @property
    def inertia(self) -> float:
        """𝓘 = 1/(2B) in ps (ħ = 1)."""
        return 1.0 / (2.0 * self.rotational_constant)

    @property
    def period(self) -> float:
        """T = 4π𝓘, the window over which every Δω = n/(2𝓘) is orthogonal."""
        return 4.0 * np.pi * self.inertia

    @property
    def delta_alpha(self) -> float:
        return self.alpha_parallel - self.alpha_perp

    def spin_weight(self, J: np.ndarray | int) -> np.ndarray:
        J = np.asarray(J)
        return np.where(J % 2 == 0, self.spin_weight_even, self.spin_weight_odd)

    def energies(self, j_max: int) -> np.ndarray:
        return rotor_energies(j_max, self.rotational_constant, self.centrifugal_distortion)


# ----------------------------------------------------------------------
# Thermal ensemble
# ----------------------------------------------------------------------

_TAIL_CHUNK = 64
_TAIL_LIMIT = 20000


def thermal_weights(spec: RotorSpec, j_max: int, tail_tolerance: float = 1e-6) -> np.ndarray:
    """Population ω_J of each |J m⟩ state for J = 0 .. j_max.

    The weights satisfy Σ_J (2J+1) ω_J = 1 after truncation.

    Raises:
        JMaxTooSmallError: If the Boltzmann mass beyond ``j_max`` exceeds
            ``tail_tolerance`` of the full partition function.
    """
    if spec.temperature == 0.0:
        J = np.arange(j_max + 1)
        allowed = np.flatnonzero(spec.spin_weight(J) > 0)
        if allowed.size == 0:
            raise JMaxTooSmallError(f"no spin-allowed level at or below j_max={j_max}")
        ground = int(allowed[0])
        weights = np.zeros(j_max + 1)
        weights[ground] = 1.0 / (2 * ground + 1)
        return weights

    kt = spec.temperature * KELVIN_TO_RAD_PER_PS

    def boltzmann(J: np.ndarray) -> np.ndarray:
        jj = J * (J + 1.0)
        energy = spec.rotational_constant * jj - spec.centrifugal_distortion * jj * jj
        return spec.spin_weight(J) * np.exp(-energy / kt)

    J = np.arange(j_max + 1)
    kept = boltzmann(J)
    kept_mass = float(np.sum((2 * J + 1) * kept))

    tail_mass = 0.0
    start = j_max + 1
    while start < _TAIL_LIMIT:
        chunk = np.arange(start, start + _TAIL_CHUNK)
        contribution = float(np.sum((2 * chunk + 1) * boltzmann(chunk)))
        tail_mass += contribution
        start += _TAIL_CHUNK
        if contribution <= 1e-17 * (kept_mass + tail_mass):
            break

    if kept_mass <= 0.0:
        raise JMaxTooSmallError(f"no thermal population at or below j_max={j_max}")
    tail = tail_mass / (kept_mass + tail_mass)
    if tail > tail_tolerance:
        raise JMaxTooSmallError(f"j_max too small: thermal tail {tail:.3e} above {tail_tolerance:.1e} at j_max={j_max}")

    return kept / kept_mass


def thermal_density(spec: RotorSpec, j_max: int, tail_tolerance: float = 1e-6) -> RotationalDensityMatrix:
    """Incoherent thermal ensemble Σ ω_{J0} |J0 m0⟩⟨J0 m0| in the Δm = 0 block pattern."""
    weights = thermal_weights(spec, j_max, tail_tolerance)
    rho = RotationalDensityMatrix.zeros(
        j_max,
        rotational_constant=spec.rotational_constant,
        centrifugal_distortion=spec.centrifugal_distortion,
    )
    for m in range(-j_max, j_max + 1):
        rho.blocks[(m, m)] = np.diag(weights[abs(m) :]).astype(complex)
    logger.debug("thermal_density_built", j_max=j_max, temperature_k=spec.temperature)
    return rho


# ----------------------------------------------------------------------
# cos²θ matrix elements
# ----------------------------------------------------------------------


def cos2theta_element(J1: int, J2: int, m: int) -> float:
    """⟨J1 m|cos²θ|J2 m⟩ from cos²θ = 1/3 + (2/3) P_2(cos θ)."""
    if abs(m) > min(J1, J2):
        return 0.0
    if abs(J1 - J2) not in (0, 2):
        return 0.0
    p2 = (
        np.sqrt((2 * J2 + 1) / (2 * J1 + 1))
        * clebsch_gordan(J2, m, 2, 0, J1, m)
        * clebsch_gordan(J2, 0, 2, 0, J1, 0)
    )
    return float((J1 == J2) / 3.0 + 2.0 / 3.0 * p2)


def cos2_matrix(m: int, j_max: int) -> np.ndarray:
    """cos²θ over J = |m| .. j_max at fixed m."""
    J = range(abs(m), j_max + 1)
    return np.array([[cos2theta_element(a, b, m) for b in J] for a in J])
