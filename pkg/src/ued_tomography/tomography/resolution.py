"""Sampling requirements for rotational tomography up to a given j_max."""

from __future__ import annotations

import numpy as np

from ued_tomography.errors import ValidationError


def resolution_requirements(j_max: int, inertia: float) -> tuple[float, float]:
    """Coarsest time step and polar spacing that still resolve j_max.

    The fastest beat is Δω_max = j_max(j_max+1)/(2𝓘) (ΔJ = j_max, J = j_max),
    so Nyquist sampling needs δt ≤ π/Δω_max = 2π𝓘/(j_max(j_max+1)).  The
    nodes of P̃_{2 j_max} are π/(2 j_max) apart at best, hence δθ = π/(2 j_max).

    Args:
        j_max: Highest rotational quantum number, ≥ 1.
        inertia: 𝓘 = 1/(2B) in the time unit of the result.

    Returns:
        (δt_max, δθ_max) in the time unit of ``inertia`` and radians.
    """
    if j_max < 1:
        raise ValidationError(f"j_max must be at least 1, got {j_max}")
    if inertia <= 0:
        raise ValidationError("moment of inertia must be positive")
    return 2.0 * np.pi * inertia / (j_max * (j_max + 1)), np.pi / (2.0 * j_max)


def required_time_samples(j_max: int) -> int:
    """Samples per revival period keeping the largest harmonic j_max(j_max+1) below Nyquist."""
    return 2 * j_max * (j_max + 1) + 1
