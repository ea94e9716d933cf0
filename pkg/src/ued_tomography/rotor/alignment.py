"""Nonresonant laser alignment of a linear rotor.

Each thermally populated |J0 m⟩ evolves under
H_eff(t) = B J(J+1) − ½ε²(t)[α⊥ + (α∥ − α⊥) cos²θ] into a pendular state
Σ_J d_J^{(J0 m)} e^{−iE_J t} |J m⟩.  The d coefficients stop changing once the
pulse is over, so a single propagation over the pulse window determines the
density matrix at every later time.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import structlog
from scipy import constants
from scipy.integrate import solve_ivp

from ued_tomography.config.pipeline import PulseConfig
from ued_tomography.errors import PropagationError, ValidationError
from ued_tomography.rotor.density import RotationalDensityMatrix
from ued_tomography.rotor.model import PS, RotorSpec, cos2_matrix, thermal_weights

logger = structlog.get_logger()

FS = 1e-3  # ps
# ½ε²·α for 1 W/cm² and 1 Å³, in rad/ps: 2π I α / c / ħ
_STARK_RAD_PER_PS = 2.0 * np.pi * 1e4 * 1e-30 / constants.c / constants.hbar * PS
_SUPPORT_WIDTHS = 3.0


@dataclass(frozen=True)
class LaserPulse:
    """Gaussian intensity envelope polarized along lab z.

    Attributes:
        fwhm: Intensity full width at half maximum, ps.
        peak_intensity: W/cm².
        center: Time of the intensity maximum, ps.
    """

    fwhm: float
    peak_intensity: float
    center: float | None = None

    def __post_init__(self) -> None:
        if self.fwhm <= 0:
            raise ValidationError("pulse duration must be positive")
        if self.peak_intensity < 0:
            raise ValidationError("peak intensity must be nonnegative")

    @classmethod
    def from_config(cls, config: PulseConfig) -> LaserPulse:
        center = None if config.center_fs is None else config.center_fs * FS
        return cls(fwhm=config.fwhm_fs * FS, peak_intensity=config.peak_intensity_w_cm2, center=center)

    @property
    def peak_time(self) -> float:
        return _SUPPORT_WIDTHS * self.fwhm if self.center is None else self.center

    def support(self) -> tuple[float, float]:
        """Window outside of which the envelope is below ~1e−11 of its peak."""
        start = max(0.0, self.peak_time - _SUPPORT_WIDTHS * self.fwhm)
        return start, self.peak_time + _SUPPORT_WIDTHS * self.fwhm

    def envelope(self, t: np.ndarray | float) -> np.ndarray:
        return np.exp(-4.0 * np.log(2.0) * (np.asarray(t) - self.peak_time) ** 2 / self.fwhm**2)

    def field_squared(self, t: np.ndarray | float) -> np.ndarray:
        """Cycle-averaged ε²(t), scaled so that ½ε²α is in rad/ps for α in Å³."""
        return 2.0 * _STARK_RAD_PER_PS * self.peak_intensity * self.envelope(t)


@dataclass
class PendularCoefficients:
    """Post-pulse pendular coefficients d_J^{(J0 m)}.

    Attributes:
        j_max: Basis truncation.
        coefficients: m ≥ 0 → complex matrix with rows J and columns J0,
            both running over |m| .. j_max.  Negative m reuse |m|.
    """

    j_max: int
    coefficients: dict[int, np.ndarray]

    def for_m(self, m: int) -> np.ndarray:
        return self.coefficients[abs(m)]

    def norm_error(self) -> float:
        return max(
            float(np.max(np.abs(np.sum(np.abs(d) ** 2, axis=0) - 1.0), initial=0.0))
            for d in self.coefficients.values()
        )


def _propagate_block(
    m: int,
    spec: RotorSpec,
    pulse: LaserPulse,
    j_max: int,
    rtol: float,
    atol: float,
    norm_tolerance: float,
) -> np.ndarray:
    energies = spec.energies(j_max)[m:]
    n = energies.size
    t0, t1 = pulse.support()
    if pulse.peak_intensity == 0.0:
        return np.eye(n, dtype=complex)

    coupling = spec.alpha_perp * np.eye(n) + spec.delta_alpha * cos2_matrix(m, j_max)
    free = np.diag(energies)

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        hamiltonian = free - 0.5 * pulse.field_squared(t) * coupling
        return (-1j * hamiltonian @ y.reshape(n, n)).ravel()

    solution = solve_ivp(
        rhs,
        (t0, t1),
        np.eye(n, dtype=complex).ravel(),
        method="RK45",
        rtol=rtol,
        atol=atol,
        max_step=pulse.fwhm / 10.0,
    )
    if not solution.success:
        raise PropagationError(f"integration failed for m={m}: {solution.message}")

    evolution = solution.y[:, -1].reshape(n, n)
    drift = float(np.max(np.abs(np.sum(np.abs(evolution) ** 2, axis=0) - 1.0)))
    if drift > norm_tolerance:
        raise PropagationError(f"step too coarse: norm drift {drift:.2e} for m={m}")

    # interaction picture: d(t1) = e^{iE t1} U(t1, t0) e^{−iE t0}
    return np.exp(1j * energies * t1)[:, None] * evolution * np.exp(-1j * energies * t0)[None, :]


def propagate_alignment(
    spec: RotorSpec,
    pulse: LaserPulse,
    j_max: int,
    rtol: float = 1e-10,
    atol: float = 1e-12,
    norm_tolerance: float = 1e-6,
    max_workers: int = 1,
) -> PendularCoefficients:
    """Integrate the pendular coefficients across the pulse for every m ≥ 0.

    Blocks of different m are independent and run on ``max_workers`` threads;
    results are collected in m order.

    Raises:
        PropagationError: If any column loses norm by more than ``norm_tolerance``.
    """
    log = logger.bind(j_max=j_max, peak_intensity=pulse.peak_intensity)
    with ThreadPoolExecutor(max_workers=max(1, max_workers)) as pool:
        blocks = list(
            pool.map(
                lambda m: _propagate_block(m, spec, pulse, j_max, rtol, atol, norm_tolerance),
                range(j_max + 1),
            )
        )
    coefficients = PendularCoefficients(j_max=j_max, coefficients=dict(enumerate(blocks)))
    log.info("alignment_propagated", norm_error=coefficients.norm_error())
    return coefficients


def density_from_pendular(
    coeffs: PendularCoefficients,
    spec: RotorSpec,
    t: float,
    tail_tolerance: float = 1e-6,
    top_shell_tolerance: float = 1e-4,
) -> RotationalDensityMatrix:
    """Density matrix of the aligned ensemble at post-pulse time ``t``.

    ρ_m(t) = d diag(ω) d† ⊙ e^{−i(E_{J1}−E_{J2})t} for every m; the
    partial trace over each (m, J parity) class equals its thermal value.
    """
    j_max = coeffs.j_max
    weights = thermal_weights(spec, j_max, tail_tolerance)
    energies = spec.energies(j_max)

    blocks = {}
    top_shell = 0.0
    for m in range(-j_max, j_max + 1):
        d = coeffs.for_m(m)
        block = (d * weights[abs(m) :]) @ d.conj().T
        e = energies[abs(m) :]
        blocks[(m, m)] = block * np.exp(-1j * np.subtract.outer(e, e) * t)
        top_shell += float(np.sum(np.diag(block).real[-2:]))

    if top_shell > top_shell_tolerance:
        logger.warning("pendular_truncation_population", top_shell_population=top_shell, j_max=j_max)

    return RotationalDensityMatrix(
        j_max=j_max,
        blocks=blocks,
        reference_time=t,
        rotational_constant=spec.rotational_constant,
        centrifugal_distortion=spec.centrifugal_distortion,
    )


def cos2_expectation(rho: RotationalDensityMatrix, times: np.ndarray) -> np.ndarray:
    """⟨cos²θ⟩(t) = Σ_m Tr(ρ_m(t) C_m) over the Δm = 0 blocks."""
    matrices = {m: cos2_matrix(m, rho.j_max) for m in range(-rho.j_max, rho.j_max + 1)}
    values = []
    for t in np.atleast_1d(times):
        evolved = rho.evolve(float(t))
        values.append(
            sum(np.trace(evolved.block(m, m) @ matrices[m]).real for m in range(-rho.j_max, rho.j_max + 1))
        )
    return np.array(values)
