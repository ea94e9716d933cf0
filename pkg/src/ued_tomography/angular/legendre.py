"""Normalized associated Legendre functions and spherical harmonics.

P̃_J^m(x) = (−1)^m √((2J+1)(J−m)! / (2(J+m)!)) P_J^m(x) with P_J^m free of the
Condon–Shortley phase, so that ∫ P̃_{J1}^m P̃_{J2}^m dx = δ_{J1 J2} and
Y_Jm = P̃_J^m e^{imφ}/√(2π) are the usual spherical harmonics.

Values are generated with the fully normalized upward recurrence in J, which
never forms factorials and stays in range for any order that float64 can
represent at the grid nodes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ued_tomography.angular.grid import AngularGrid
from ued_tomography.errors import BasisOrderError

# Above this order the sectoral seed underflows to zero near the poles
MAX_BASIS_ORDER = 1500


def normalized_legendre(j_max: int, x: np.ndarray) -> np.ndarray:
    """Evaluate P̃_J^m(x) for 0 ≤ J ≤ j_max and −J ≤ m ≤ J.

    Returns:
        Array of shape ``(j_max + 1, 2 * j_max + 1, len(x))`` indexed by
        ``[J, m + j_max, node]``; entries with |m| > J are zero.

    Raises:
        BasisOrderError: If ``j_max`` is beyond what the recurrence can
            evaluate, or any value comes out non-finite.
    """
    if j_max < 0:
        raise BasisOrderError(f"basis order must be nonnegative, got {j_max}")
    if j_max > MAX_BASIS_ORDER:
        raise BasisOrderError(f"basis order too large: j_max={j_max} > {MAX_BASIS_ORDER}")

    x = np.asarray(x, dtype=float)
    sin_t = np.sqrt(np.clip(1.0 - x * x, 0.0, None))
    out = np.zeros((j_max + 1, 2 * j_max + 1, x.size))

    sectoral = np.full(x.size, 1.0 / np.sqrt(2.0))
    for m in range(j_max + 1):
        if m > 0:
            sectoral = -np.sqrt((2 * m + 1) / (2 * m)) * sin_t * sectoral
        out[m, j_max + m] = sectoral
        if m + 1 <= j_max:
            out[m + 1, j_max + m] = x * np.sqrt(2 * m + 3) * sectoral
        for J in range(m + 2, j_max + 1):
            a_j = np.sqrt((4 * J * J - 1) / (J * J - m * m))
            a_prev = np.sqrt((4 * (J - 1) ** 2 - 1) / ((J - 1) ** 2 - m * m))
            out[J, j_max + m] = a_j * (x * out[J - 1, j_max + m] - out[J - 2, j_max + m] / a_prev)

    # P̃_J^{−m} = (−1)^m P̃_J^m
    for m in range(1, j_max + 1):
        out[:, j_max - m] = (-1) ** m * out[:, j_max + m]

    if not np.all(np.isfinite(out)):
        raise BasisOrderError(f"basis order too large: non-finite values at j_max={j_max}")
    return out


@dataclass(frozen=True)
class LegendreTable:
    """P̃_J^m at the polar nodes of a grid.

    Attributes:
        j_max: Highest degree tabulated.
        values: Array ``[J, m + j_max, node]``.
        grid: Grid whose polar nodes were used.
    """

    j_max: int
    values: np.ndarray
    grid: AngularGrid

    def get(self, J: int, m: int) -> np.ndarray:
        if abs(m) > J or J > self.j_max:
            return np.zeros(self.values.shape[-1])
        return self.values[J, m + self.j_max]

    def block(self, m: int, j_max: int | None = None) -> np.ndarray:
        """Rows P̃_J^m for J = |m| .. j_max, shape ``(n_J, n_theta)``."""
        top = self.j_max if j_max is None else j_max
        return self.values[abs(m) : top + 1, m + self.j_max]


def evaluate_legendre(j_max: int, grid: AngularGrid) -> LegendreTable:
    """Tabulate normalized associated Legendre functions on ``grid``."""
    return LegendreTable(j_max=j_max, values=normalized_legendre(j_max, grid.cos_theta), grid=grid)


def spherical_harmonic(J: int, m: int, theta: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """Y_Jm(θ, φ) = P̃_J^m(cos θ) e^{imφ}/√(2π), broadcasting θ against φ."""
    theta, phi = np.broadcast_arrays(np.asarray(theta, dtype=float), np.asarray(phi, dtype=float))
    if abs(m) > J:
        return np.zeros(theta.shape, dtype=complex)
    p = normalized_legendre(J, np.cos(theta).ravel())[J, m + J].reshape(theta.shape)
    return p * np.exp(1j * m * phi) / np.sqrt(2.0 * np.pi)
