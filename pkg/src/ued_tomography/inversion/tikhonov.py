"""Tikhonov-regularized least squares, Pr = (KᵀK + λE)⁻¹ KᵀI.

Each frame is inverted independently.  For a fixed λ the factorization is
computed once and shared read-only by all frames.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
import structlog
from scipy.linalg import LinAlgError, cho_factor, cho_solve, lstsq

from ued_tomography.diffraction.forward import DiffractionDataset
from ued_tomography.diffraction.kernel import KernelMatrix
from ued_tomography.errors import SingularSystemError, ValidationError
from ued_tomography.rotor.synthesis import AngularDistribution

logger = structlog.get_logger()

Backend = Literal["cholesky", "lstsq"]


@dataclass
class TikhonovSolver:
    """Regularized solver for one kernel and one λ.

    ``cholesky`` factors the normal equations; ``lstsq`` solves the
    augmented system [K; √λ E] Pr = [I; 0].  Both agree for λ > 0.
    """

    matrix: np.ndarray
    lam: float
    backend: Backend = "cholesky"
    _factor: tuple[np.ndarray, bool] | None = field(default=None, init=False, repr=False)

    def __post_init__(self) -> None:
        if self.lam < 0:
            raise ValidationError(f"regularization parameter must be nonnegative, got {self.lam}")
        if self.matrix.ndim != 2:
            raise ValidationError("kernel must be a 2-D matrix")
        if self.backend not in ("cholesky", "lstsq"):
            raise ValidationError(f"unknown backend {self.backend!r}")
        if self.lam == 0 and np.linalg.matrix_rank(self.matrix) < self.matrix.shape[1]:
            raise SingularSystemError("singular system: KᵀK is rank deficient and lambda=0")
        if self.backend == "cholesky":
            normal = self.matrix.T @ self.matrix + self.lam * np.eye(self.matrix.shape[1])
            try:
                self._factor = cho_factor(normal)
            except LinAlgError as e:
                raise SingularSystemError(f"singular system: {e}") from e

    def solve(self, frame: np.ndarray) -> np.ndarray:
        frame = np.asarray(frame, dtype=float)
        if frame.shape != (self.matrix.shape[0],):
            raise ValidationError(f"frame has shape {frame.shape}, kernel has {self.matrix.shape[0]} rows")
        if self._factor is not None:
            return cho_solve(self._factor, self.matrix.T @ frame)
        n_cols = self.matrix.shape[1]
        augmented = np.vstack([self.matrix, np.sqrt(self.lam) * np.eye(n_cols)])
        rhs = np.concatenate([frame, np.zeros(n_cols)])
        solution, *_ = lstsq(augmented, rhs)
        return solution

    def solve_many(self, frames: np.ndarray, max_workers: int = 1) -> np.ndarray:
        with ThreadPoolExecutor(max_workers=max(1, max_workers)) as pool:
            return np.array(list(pool.map(self.solve, np.atleast_2d(frames))))


def tikhonov_solve(matrix: np.ndarray, frame: np.ndarray, lam: float, backend: Backend = "cholesky") -> np.ndarray:
    """Regularized solution of K Pr = I for a single frame.

    Raises:
        SingularSystemError: If λ = 0 and KᵀK is rank deficient.
    """
    return TikhonovSolver(np.asarray(matrix, dtype=float), lam, backend).solve(frame)


@dataclass
class ConditionEstimate:
    """Empirical condition number with its spread over noise trials."""

    mean: float
    spread: float
    values: np.ndarray


def condition_number(
    matrix: np.ndarray,
    lam: float,
    frame: np.ndarray | None = None,
    noise: float = 0.01,
    trials: int = 5,
    seed: int = 0,
    backend: Backend = "cholesky",
) -> ConditionEstimate:
    """cond = (‖ΔPr‖/‖Pr‖) / (‖ΔI‖/‖I‖) under seeded Gaussian perturbations.

    Each trial adds relative noise of size ``noise`` to every pixel of
    ``frame`` (default: the pattern of a uniform distribution) and re-solves.
    """
    if trials < 1:
        raise ValidationError("condition number needs at least one trial")
    matrix = np.asarray(matrix, dtype=float)
    solver = TikhonovSolver(matrix, lam, backend)
    if frame is None:
        frame = matrix @ np.full(matrix.shape[1], 1.0 / (4.0 * np.pi))
    frame = np.asarray(frame, dtype=float)
    base = solver.solve(frame)
    base_norm = np.linalg.norm(base)
    frame_norm = np.linalg.norm(frame)
    if base_norm == 0 or frame_norm == 0:
        raise ValidationError("condition number undefined for a zero frame or solution")

    rng = np.random.default_rng(seed)
    values = []
    for _ in range(trials):
        delta = noise * np.abs(frame) * rng.standard_normal(frame.size)
        if not np.any(delta):
            delta = noise * frame_norm / np.sqrt(frame.size) * rng.standard_normal(frame.size)
        change = solver.solve(frame + delta) - base
        values.append((np.linalg.norm(change) / base_norm) / (np.linalg.norm(delta) / frame_norm))
    values = np.array(values)
    return ConditionEstimate(mean=float(values.mean()), spread=float(values.std()), values=values)


def invert_dataset(
    kernel: KernelMatrix,
    dataset: DiffractionDataset,
    lam: float,
    backend: Backend = "cholesky",
    max_workers: int = 1,
) -> AngularDistribution:
    """Recover Pr(θ, φ) for every frame; masked pixels drop out of K and I."""
    if dataset.geometry.n_pixels != kernel.n_rows:
        raise ValidationError(f"dataset has {dataset.geometry.n_pixels} pixels, kernel {kernel.n_rows} rows")
    rows = np.intersect1d(kernel.rows(), dataset.geometry.kept_rows())
    logger.info("inversion_rows", total=kernel.n_rows, kept=int(rows.size), dropped=int(kernel.n_rows - rows.size))
    solver = TikhonovSolver(kernel.matrix[rows], lam, backend)
    vectors = solver.solve_many(dataset.frames[:, rows], max_workers)
    return AngularDistribution.from_vectors(kernel.grid, dataset.time_nodes, vectors)
