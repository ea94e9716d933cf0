"""Forward model: orientation movies to diffraction frames."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
import structlog

from ued_tomography.angular.grid import AngularGrid
from ued_tomography.angular.legendre import LegendreTable
from ued_tomography.diffraction.geometry import MoleculeGeometry, Probe, ScatteringGeometry
from ued_tomography.diffraction.kernel import KernelMatrix, build_kernel
from ued_tomography.errors import ValidationError
from ued_tomography.rotor.density import RotationalDensityMatrix
from ued_tomography.rotor.synthesis import AngularDistribution, synthesize_probability

logger = structlog.get_logger()

_NEGATIVE_TOLERANCE = 1e-10


@dataclass
class DiffractionDataset:
    """Time-ordered diffraction frames.

    Attributes:
        geometry: Detector the frames are sampled on.
        time_nodes: ps.
        frames: Array (n_time, n_pixels) in intensity units.
        photon_budget: Expected counts per frame when Poisson noise was added.
        seed: Seed of the noise draw.
        counts_per_unit: Scale between intensity units and counts.
    """

    geometry: ScatteringGeometry
    time_nodes: np.ndarray
    frames: np.ndarray
    photon_budget: float | None = None
    seed: int | None = None
    counts_per_unit: float | None = None

    def __post_init__(self) -> None:
        if self.frames.shape != (self.time_nodes.size, self.geometry.n_pixels):
            raise ValidationError(
                f"frames shape {self.frames.shape} does not match ({self.time_nodes.size}, {self.geometry.n_pixels})"
            )
        scale = float(np.max(np.abs(self.frames), initial=0.0))
        if np.any(self.frames < -_NEGATIVE_TOLERANCE * max(scale, 1.0)):
            raise ValidationError("diffraction frames must be nonnegative")

    @property
    def n_frames(self) -> int:
        return self.time_nodes.size

    def masked_frames(self) -> np.ndarray:
        return self.frames[:, self.geometry.kept_rows()]


def forward_intensity(
    kernel: KernelMatrix,
    distribution: AngularDistribution,
    max_workers: int = 1,
) -> DiffractionDataset:
    """I(s, t) = K Pr(t) for every frame.

    Raises:
        ValidationError: If the distribution grid differs from the kernel columns.
    """
    if not kernel.grid.matches(distribution.grid):
        raise ValidationError("grid mismatch: distribution grid does not match kernel columns")
    vectors = distribution.as_vectors()
    with ThreadPoolExecutor(max_workers=max(1, max_workers)) as pool:
        frames = np.array(list(pool.map(lambda v: kernel.matrix @ v, vectors)))
    frames = frames.reshape(distribution.time_nodes.size, kernel.n_rows)
    return DiffractionDataset(geometry=kernel.geometry, time_nodes=distribution.time_nodes, frames=frames)


def add_poisson_noise(dataset: DiffractionDataset, photon_budget: float | None, seed: int = 0) -> DiffractionDataset:
    """Draw Poisson counts with ``photon_budget`` expected counts per frame.

    A single counts-per-unit scale is set from the mean frame total, so
    relative intensities between frames survive.  Counts are divided by the
    scale again, keeping the frames in intensity units.  A missing or
    infinite budget returns the dataset unchanged.
    """
    if photon_budget is None or np.isinf(photon_budget):
        return dataset
    if photon_budget <= 0:
        raise ValidationError("photon budget must be positive")
    mean_total = float(np.mean(dataset.masked_frames().sum(axis=1)))
    if mean_total <= 0:
        raise ValidationError("cannot add counting noise to empty frames")
    scale = photon_budget / mean_total
    rng = np.random.default_rng(seed)
    counts = rng.poisson(dataset.frames * scale)
    logger.info("poisson_noise_added", photon_budget=photon_budget, seed=seed, counts_per_unit=scale)
    return replace(
        dataset,
        frames=counts / scale,
        photon_budget=photon_budget,
        seed=seed,
        counts_per_unit=scale,
    )


def simulate_dataset(
    rho: RotationalDensityMatrix,
    mol: MoleculeGeometry,
    geometry: ScatteringGeometry,
    grid: AngularGrid,
    time_nodes: np.ndarray,
    noise_budget: float | None = None,
    seed: int = 0,
    kernel: KernelMatrix | None = None,
    legendre: LegendreTable | None = None,
) -> tuple[DiffractionDataset, AngularDistribution]:
    """Synthesize Pr(θ, φ, t) from ``rho`` and diffract it.

    Returns the dataset together with the ground-truth distribution.
    """
    distribution = synthesize_probability(rho, grid, time_nodes, legendre)
    kernel = build_kernel(mol, geometry, grid) if kernel is None else kernel
    dataset = forward_intensity(kernel, distribution)
    return add_poisson_noise(dataset, noise_budget, seed), distribution


def isotropic_pattern(mol: MoleculeGeometry, s_magnitude: np.ndarray, probe: Probe = "xray") -> np.ndarray:
    """Orientation-averaged |f|²: Σ_αβ f_α f_β sin(s R_αβ)/(s R_αβ).

    K applied to the uniform distribution Pr = 1/(4π) reproduces this
    average up to quadrature error.
    """
    s_magnitude = np.asarray(s_magnitude, dtype=float)
    amplitudes = mol.atomic_amplitudes(s_magnitude, probe)
    distances = np.linalg.norm(mol.positions[:, None, :] - mol.positions[None, :, :], axis=-1)
    # np.sinc(x) = sin(πx)/(πx)
    interference = np.sinc(np.multiply.outer(distances, s_magnitude) / np.pi)
    return np.einsum("as,bs,abs->s", amplitudes, amplitudes, interference)
