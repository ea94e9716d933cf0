"""Harmonic-oscillator basis, regular and irregular wavefunctions, pattern functions.

Coordinates are dimensionless, x = X/√(ħ/(μω)).  The regular solutions φ_n
are normalized Hermite–Gaussians.  The irregular solutions 𝜑_n solve the
same equation −½ψ'' + ½x²ψ = (n+½)ψ and are fixed by parity and the
Wronskian φ_n 𝜑_n' − φ_n' 𝜑_n = 2.  With that normalization the pattern
functions f_mn = ∂_x(φ_max(m,n) 𝜑_min(m,n)) satisfy

    ∫ f_mn φ_m' φ_n' dx = δ_mm' δ_nn'   whenever m − n = m' − n'.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import reduce
from itertools import product

import numpy as np
from scipy import constants
from scipy.integrate import solve_ivp

from ued_tomography.config.pipeline import VibrationalConfig
from ued_tomography.errors import ResolutionError, ValidationError

FS = 1e-15
WAVENUMBER_TO_RAD_PER_FS = 2.0 * np.pi * constants.c * 100.0 * FS
_WRONSKIAN = 2.0

State = tuple[int, ...]


@dataclass(frozen=True)
class OscillatorBasis:
    """Separable harmonic modes with commensurate frequencies ω_i = r_i ω₀.

    Attributes:
        mode_ratios: Smallest positive integers r_i.
        base_frequency: ω₀ in rad/fs.
        reduced_masses: amu per mode.
        n_max: Highest quantum number per mode.
        x_step: Grid spacing in oscillator units.
        x_margin: Extent beyond the outermost classical turning point.
        enforce_resolution: Reject x_step above π/(2√(2n_max+1)).
    """

    mode_ratios: tuple[int, ...]
    base_frequency: float
    reduced_masses: tuple[float, ...]
    n_max: int
    x_step: float = 0.05
    x_margin: float = 5.0
    enforce_resolution: bool = True

    def __post_init__(self) -> None:
        if not self.mode_ratios or any(r <= 0 for r in self.mode_ratios):
            raise ValidationError("mode ratios must be positive integers")
        if reduce(math.gcd, self.mode_ratios) != 1:
            raise ValidationError(f"mode ratios {self.mode_ratios} are not reduced to smallest integers")
        if len(self.reduced_masses) != len(self.mode_ratios):
            raise ValidationError("one reduced mass per mode is required")
        if self.base_frequency <= 0 or self.n_max < 0:
            raise ValidationError("base frequency must be positive and n_max nonnegative")
        if self.x_margin < 5.0:
            raise ValidationError("grid must extend at least 5 units past the classical turning point")
        bound = np.pi / (2.0 * np.sqrt(2 * self.n_max + 1))
        if self.enforce_resolution and self.x_step > bound:
            raise ResolutionError(f"grid too coarse: x_step={self.x_step} above {bound:.4f} for n_max={self.n_max}")

    @classmethod
    def from_config(cls, config: VibrationalConfig, enforce_resolution: bool = True) -> OscillatorBasis:
        return cls(
            mode_ratios=tuple(config.mode_ratios),
            base_frequency=config.base_frequency_cm * WAVENUMBER_TO_RAD_PER_FS,
            reduced_masses=tuple(config.reduced_masses_amu),
            n_max=config.n_max,
            x_step=config.x_step,
            x_margin=config.x_margin,
            enforce_resolution=enforce_resolution,
        )

    @property
    def mode_count(self) -> int:
        return len(self.mode_ratios)

    @property
    def period(self) -> float:
        """T = 2π/ω₀ in fs."""
        return 2.0 * np.pi / self.base_frequency

    @property
    def frequencies(self) -> np.ndarray:
        return self.base_frequency * np.array(self.mode_ratios, dtype=float)

    def length_scale(self, mode: int) -> float:
        """√(ħ/(μ ω)) of ``mode`` in Å; multiplies x to give a displacement."""
        mass = self.reduced_masses[mode] * constants.atomic_mass
        omega = self.frequencies[mode] / FS
        return float(np.sqrt(constants.hbar / (mass * omega)) * 1e10)

    def x_grid(self) -> np.ndarray:
        """Symmetric uniform grid containing x = 0."""
        extent = np.sqrt(2 * self.n_max + 1) + self.x_margin
        half = int(np.ceil(extent / self.x_step))
        return self.x_step * np.arange(-half, half + 1)

    def x_weights(self) -> np.ndarray:
        return np.full(self.x_grid().size, self.x_step)

    def states(self) -> list[State]:
        """Product basis, last mode fastest."""
        return list(product(range(self.n_max + 1), repeat=self.mode_count))

    def energy(self, state: State) -> float:
        """Σ r_i n_i in units of ħω₀, without the zero-point term."""
        return float(sum(r * n for r, n in zip(self.mode_ratios, state)))

    def frequency_index(self, offset: State) -> int:
        """k = Σ r_i Δ_i."""
        return int(sum(r * d for r, d in zip(self.mode_ratios, offset)))

    def offsets(self) -> list[State]:
        """Every Δ⃗ with |Δ_i| ≤ n_max."""
        return list(product(range(-self.n_max, self.n_max + 1), repeat=self.mode_count))

    def offsets_for_k(self, k: int) -> list[State]:
        return [d for d in self.offsets() if self.frequency_index(d) == k]

    def max_frequency_index(self) -> int:
        return self.n_max * sum(self.mode_ratios)

    def required_time_samples(self) -> int:
        """Samples per period with δt ≤ T/(2(n_max+1)Σr_i)."""
        return 2 * (self.n_max + 1) * sum(self.mode_ratios)


def regular_wavefunctions(n_max: int, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """φ_n(x) and φ_n'(x) for n = 0 .. n_max, each of shape (n_max+1, n_x)."""
    x = np.asarray(x, dtype=float)
    phi = np.zeros((n_max + 1, x.size))
    phi[0] = np.pi**-0.25 * np.exp(-0.5 * x * x)
    if n_max >= 1:
        phi[1] = np.sqrt(2.0) * x * phi[0]
    for n in range(1, n_max):
        phi[n + 1] = np.sqrt(2.0 / (n + 1)) * x * phi[n] - np.sqrt(n / (n + 1)) * phi[n - 1]
    derivative = -x * phi
    for n in range(1, n_max + 1):
        derivative[n] += np.sqrt(2.0 * n) * phi[n - 1]
    return phi, derivative


def regular_wavefunction(n: int, x: np.ndarray) -> np.ndarray:
    return regular_wavefunctions(n, x)[0][n]


def irregular_wavefunctions(n_max: int, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """𝜑_n(x) and 𝜑_n'(x) on a grid symmetric about 0.

    Integrates 𝜑'' = (x² − 2n − 1) 𝜑 outward from x = 0 and mirrors by
    parity; 𝜑_n has the parity opposite to φ_n.
    """
    x = np.asarray(x, dtype=float)
    zero = np.flatnonzero(np.isclose(x, 0.0, atol=1e-12))
    if zero.size != 1 or not np.allclose(x, -x[::-1], atol=1e-12):
        raise ValidationError("irregular wavefunctions need a grid symmetric about x=0")
    origin = int(zero[0])
    positive = x[origin:]

    phi0, dphi0 = regular_wavefunctions(n_max, np.zeros(1))
    values = np.zeros((n_max + 1, x.size))
    derivatives = np.zeros((n_max + 1, x.size))
    for n in range(n_max + 1):
        if n % 2 == 0:
            start = [0.0, _WRONSKIAN / phi0[n, 0]]
        else:
            start = [-_WRONSKIAN / dphi0[n, 0], 0.0]
        energy = 2 * n + 1
        solution = solve_ivp(
            lambda t, y, e=energy: [y[1], (t * t - e) * y[0]],
            (0.0, positive[-1]),
            start,
            method="DOP853",
            t_eval=positive,
            rtol=1e-12,
            atol=1e-14,
        )
        if not solution.success:
            raise ValidationError(f"irregular wavefunction integration failed for n={n}: {solution.message}")
        v, dv = solution.y
        # irregular parity is (−1)^(n+1)
        sign = -1.0 if n % 2 == 0 else 1.0
        values[n, origin:] = v
        derivatives[n, origin:] = dv
        values[n, :origin] = sign * v[1:][::-1]
        derivatives[n, :origin] = -sign * dv[1:][::-1]
    return values, derivatives


def irregular_wavefunction(n: int, x: np.ndarray) -> np.ndarray:
    return irregular_wavefunctions(n, x)[0][n]


def wronskian(n: int, x: np.ndarray) -> np.ndarray:
    phi, dphi = regular_wavefunctions(n, x)
    psi, dpsi = irregular_wavefunctions(n, x)
    return phi[n] * dpsi[n] - dphi[n] * psi[n]


@dataclass(frozen=True)
class PatternFunctionTable:
    """f_mn(x) for m, n ≤ n_max on one grid; symmetric in (m, n).

    Attributes:
        x: Grid nodes.
        weights: Quadrature weights on ``x``.
        values: Array (n_max+1, n_max+1, n_x).
        regular: φ_n(x), (n_max+1, n_x).
    """

    x: np.ndarray
    weights: np.ndarray
    values: np.ndarray
    regular: np.ndarray

    @property
    def n_max(self) -> int:
        return self.values.shape[0] - 1

    def get(self, m: int, n: int) -> np.ndarray:
        return self.values[m, n]

    def biorthogonality_matrix(self, offset: int) -> tuple[list[tuple[int, int]], np.ndarray]:
        """∫ f_mn φ_m' φ_n' dx over all pairs with m − n = ``offset``; ideally the identity."""
        pairs = [(m, m - offset) for m in range(self.n_max + 1) if 0 <= m - offset <= self.n_max]
        matrix = np.array(
            [
                [np.sum(self.weights * self.values[m, n] * self.regular[mp] * self.regular[np_]) for mp, np_ in pairs]
                for m, n in pairs
            ]
        )
        return pairs, matrix

    def biorthogonality_error(self) -> float:
        worst = 0.0
        for offset in range(-self.n_max, self.n_max + 1):
            _, matrix = self.biorthogonality_matrix(offset)
            worst = max(worst, float(np.max(np.abs(matrix - np.eye(len(matrix))))))
        return worst


def pattern_function(m: int, n: int, x: np.ndarray) -> np.ndarray:
    """f_mn = ∂_x(φ_M 𝜑_N) with M = max(m, n), N = min(m, n)."""
    top, bottom = max(m, n), min(m, n)
    phi, dphi = regular_wavefunctions(top, x)
    psi, dpsi = irregular_wavefunctions(bottom, x)
    return dphi[top] * psi[bottom] + phi[top] * dpsi[bottom]


def build_pattern_table(basis: OscillatorBasis, max_workers: int = 1) -> PatternFunctionTable:
    """Tabulate every f_mn on the basis grid, pairs built on ``max_workers`` threads."""
    x = basis.x_grid()
    phi, dphi = regular_wavefunctions(basis.n_max, x)
    psi, dpsi = irregular_wavefunctions(basis.n_max, x)

    def build(pair: tuple[int, int]) -> np.ndarray:
        top, bottom = max(pair), min(pair)
        return dphi[top] * psi[bottom] + phi[top] * dpsi[bottom]

    pairs = list(product(range(basis.n_max + 1), repeat=2))
    with ThreadPoolExecutor(max_workers=max(1, max_workers)) as pool:
        columns = list(pool.map(build, pairs))
    values = np.array(columns).reshape(basis.n_max + 1, basis.n_max + 1, x.size)
    return PatternFunctionTable(x=x, weights=basis.x_weights(), values=values, regular=phi)
