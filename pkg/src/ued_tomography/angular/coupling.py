"""Clebsch–Gordan coefficients and Legendre product expansions."""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.special import gammaln


def _log_factorial(n: int) -> float:
    return float(gammaln(n + 1))


@lru_cache(maxsize=None)
def clebsch_gordan(j1: int, m1: int, j2: int, m2: int, J: int, M: int) -> float:
    """⟨j1 m1 j2 m2 | J M⟩ from the Racah closed form.

    Invalid quantum numbers (triangle rule, projection bounds, M ≠ m1 + m2)
    give 0.  Factorials enter as logarithms so the sum stays in range.
    """
    if M != m1 + m2:
        return 0.0
    if abs(m1) > j1 or abs(m2) > j2 or abs(M) > J:
        return 0.0
    if J < abs(j1 - j2) or J > j1 + j2:
        return 0.0
    if m1 == 0 and m2 == 0 and (j1 + j2 + J) % 2 == 1:
        return 0.0

    log_prefactor = 0.5 * (
        np.log(2 * J + 1)
        + _log_factorial(J + j1 - j2)
        + _log_factorial(J - j1 + j2)
        + _log_factorial(j1 + j2 - J)
        - _log_factorial(j1 + j2 + J + 1)
        + _log_factorial(J + M)
        + _log_factorial(J - M)
        + _log_factorial(j1 - m1)
        + _log_factorial(j1 + m1)
        + _log_factorial(j2 - m2)
        + _log_factorial(j2 + m2)
    )

    k_min = max(0, j2 - J - m1, j1 - J + m2)
    k_max = min(j1 + j2 - J, j1 - m1, j2 + m2)
    total = 0.0
    for k in range(k_min, k_max + 1):
        log_denominator = (
            _log_factorial(k)
            + _log_factorial(j1 + j2 - J - k)
            + _log_factorial(j1 - m1 - k)
            + _log_factorial(j2 + m2 - k)
            + _log_factorial(J - j2 + m1 + k)
            + _log_factorial(J - j1 - m2 + k)
        )
        total += (-1) ** k * np.exp(log_prefactor - log_denominator)
    return float(total)


@lru_cache(maxsize=None)
def expansion_coefficient(L: int, J1: int, m1: int, J2: int, m2: int) -> float:
    """C^{L, m1+m2}_{J1 m1 J2 m2} with P̃_{J1}^{m1} P̃_{J2}^{m2} = Σ_L C P̃_L^{m1+m2}."""
    M = m1 + m2
    if L < abs(M) or L < abs(J1 - J2) or L > J1 + J2 or (J1 + J2 + L) % 2 == 1:
        return 0.0
    return float(
        np.sqrt((2 * J1 + 1) * (2 * J2 + 1) / (2.0 * (2 * L + 1)))
        * clebsch_gordan(J1, m1, J2, m2, L, M)
        * clebsch_gordan(J1, 0, J2, 0, L, 0)
    )


def spherical_harmonic_coefficient(L: int, J1: int, m1: int, J2: int, m2: int) -> float:
    """The same coefficient for full spherical harmonics Y·Y = Σ_L c Y_L.

    Differs from :func:`expansion_coefficient` by the factor 1/√(2π) that
    separates P̃ from Y.
    """
    return expansion_coefficient(L, J1, m1, J2, m2) / np.sqrt(2.0 * np.pi)


def product_expansion(J1: int, m1: int, J2: int, m2: int) -> list[tuple[int, float]]:
    """All (L, C) pairs for L = |J1 − J2| .. J1 + J2, zeros included."""
    return [(L, expansion_coefficient(L, J1, m1, J2, m2)) for L in range(abs(J1 - J2), J1 + J2 + 1)]
