"""Orientation quadrature grid over the unit sphere.

Polar nodes are placed in τ = −cos θ, either at Gauss–Legendre nodes
(spectrally exact for polynomial integrands) or at the midpoints of a uniform
Riemann partition with Δτ = 2/b.  Azimuthal nodes are uniform with Δφ = 2π/a.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np
from numpy.polynomial.legendre import leggauss

from ued_tomography.errors import ValidationError

Quadrature = Literal["gauss", "riemann"]


@dataclass(frozen=True)
class AngularGrid:
    """Product quadrature grid in (φ, θ).

    Attributes:
        theta_nodes: Polar angles in [0, π], strictly increasing.
        phi_nodes: Azimuths in [0, 2π), strictly increasing.
        weights_theta: Weights in τ; they sum to 2 (∫ sin θ dθ).
        weights_phi: Weights in φ; they sum to 2π.
        quadrature: ``"gauss"`` or ``"riemann"``.
    """

    theta_nodes: np.ndarray
    phi_nodes: np.ndarray
    weights_theta: np.ndarray
    weights_phi: np.ndarray
    quadrature: Quadrature = "gauss"

    @property
    def n_theta(self) -> int:
        return self.theta_nodes.size

    @property
    def n_phi(self) -> int:
        return self.phi_nodes.size

    @property
    def cos_theta(self) -> np.ndarray:
        return np.cos(self.theta_nodes)

    @property
    def cell_weights(self) -> np.ndarray:
        """Weights of the (φ, θ) cells flattened with θ fastest."""
        return np.outer(self.weights_phi, self.weights_theta).ravel()

    def matches(self, other: AngularGrid) -> bool:
        return (
            self.n_theta == other.n_theta
            and self.n_phi == other.n_phi
            and np.allclose(self.theta_nodes, other.theta_nodes, rtol=0.0, atol=1e-14)
            and np.allclose(self.phi_nodes, other.phi_nodes, rtol=0.0, atol=1e-14)
        )


def make_grid(n_theta: int, n_phi: int, quadrature: Quadrature = "gauss") -> AngularGrid:
    """Build an orientation grid with ``n_theta`` polar and ``n_phi`` azimuthal nodes."""
    if n_theta < 1 or n_phi < 1:
        raise ValidationError(f"grid needs at least one node per axis, got ({n_theta}, {n_phi})")

    if quadrature == "gauss":
        tau, w_tau = leggauss(n_theta)
    elif quadrature == "riemann":
        step = 2.0 / n_theta
        tau = -1.0 + step * (np.arange(n_theta) + 0.5)
        w_tau = np.full(n_theta, step)
    else:
        raise ValidationError(f"unknown quadrature {quadrature!r}")

    # τ increasing ⇒ θ = arccos(−τ) increasing
    theta = np.arccos(-tau)
    phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
    w_phi = np.full(n_phi, 2.0 * np.pi / n_phi)
    return AngularGrid(
        theta_nodes=theta,
        phi_nodes=phi,
        weights_theta=w_tau,
        weights_phi=w_phi,
        quadrature=quadrature,
    )
