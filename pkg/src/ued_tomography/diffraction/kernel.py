"""Orientation-resolved molecular form factors and the diffraction kernel.

The total intensity is linear in the orientation probability,
I(s_k) = Σ_c |f(θ_c, φ_c, s_k)|² Δφ Δτ Pr(θ_c, φ_c), i.e. I = K Pr with
columns ordered (φ, θ) and θ fastest.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import structlog

from ued_tomography.angular.grid import AngularGrid
from ued_tomography.diffraction.geometry import MoleculeGeometry, Probe, ScatteringGeometry
from ued_tomography.errors import KernelTooLargeError, ValidationError

logger = structlog.get_logger()

_BYTES_PER_ENTRY = 8


def molecular_form_factor(
    mol: MoleculeGeometry,
    s_vec: np.ndarray,
    theta: np.ndarray | float,
    phi: np.ndarray | float,
    probe: Probe = "xray",
) -> np.ndarray:
    """f(s) = Σ_α f_α(|s|) exp(i s·R_α) for the molecule at orientation (θ, φ).

    Args:
        mol: Molecular geometry.
        s_vec: Momentum transfers, shape (n_s, 3) or (3,).
        theta: Polar angle(s) of the molecular axis.
        phi: Azimuth(s) of the molecular axis.
        probe: ``"xray"`` (electrons) or ``"electron"`` (Å, Mott–Bethe).

    Returns:
        Complex array of shape (n_s, n_orientations); squeezed for scalars.

    Raises:
        SingularMomentumTransferError: For the electron probe at s = 0.
    """
    s_vec = np.atleast_2d(np.asarray(s_vec, dtype=float))
    positions = mol.rotated_positions(np.asarray(theta, dtype=float), np.asarray(phi, dtype=float))
    amplitudes = mol.atomic_amplitudes(np.linalg.norm(s_vec, axis=1), probe)
    phases = np.exp(1j * np.einsum("sk,cak->sca", s_vec, positions))
    result = np.einsum("as,sca->sc", amplitudes, phases)
    return np.squeeze(result)


@dataclass
class KernelMatrix:
    """K with one row per detector pixel and one column per orientation cell.

    Attributes:
        matrix: Nonnegative array of shape (n_pixels, n_phi · n_theta);
            masked rows are zero.
        geometry: Detector the rows refer to.
        grid: Orientation grid the columns refer to.
    """

    matrix: np.ndarray
    geometry: ScatteringGeometry
    grid: AngularGrid

    @property
    def n_rows(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_cols(self) -> int:
        return self.matrix.shape[1]

    def rows(self) -> np.ndarray:
        """Indices of the pixels used in inversion."""
        return self.geometry.kept_rows()

    def masked(self) -> np.ndarray:
        return self.matrix[self.rows()]


def kernel_size_bytes(n_rows: int, n_cols: int) -> int:
    return n_rows * n_cols * _BYTES_PER_ENTRY


def _kernel_rows(
    mol: MoleculeGeometry,
    s_vec: np.ndarray,
    positions: np.ndarray,
    cell_weights: np.ndarray,
    probe: Probe,
) -> np.ndarray:
    amplitudes = mol.atomic_amplitudes(np.linalg.norm(s_vec, axis=1), probe)
    phases = np.exp(1j * np.einsum("sk,cak->sca", s_vec, positions))
    f = np.einsum("as,sca->sc", amplitudes, phases)
    return np.abs(f) ** 2 * cell_weights[None, :]


def build_kernel(
    mol: MoleculeGeometry,
    geometry: ScatteringGeometry,
    grid: AngularGrid,
    memory_cap_mb: float = 2048.0,
    row_block_size: int = 4096,
    max_workers: int = 1,
) -> KernelMatrix:
    """Assemble K in row blocks, optionally on several threads.

    Raises:
        KernelTooLargeError: If the dense kernel would exceed ``memory_cap_mb``.
    """
    n_rows, n_cols = geometry.n_pixels, grid.n_phi * grid.n_theta
    size = kernel_size_bytes(n_rows, n_cols)
    if size > memory_cap_mb * 1024 * 1024:
        raise KernelTooLargeError(
            f"kernel of {n_rows} x {n_cols} needs {size / 2**20:.1f} MiB, above the cap of {memory_cap_mb:.1f} MiB"
        )
    if row_block_size < 1:
        raise ValidationError("row block size must be positive")

    # orientation cells, θ fastest within φ
    phi_cells = np.repeat(grid.phi_nodes, grid.n_theta)
    theta_cells = np.tile(grid.theta_nodes, grid.n_phi)
    positions = mol.rotated_positions(theta_cells, phi_cells)
    cell_weights = grid.cell_weights

    s_vec = geometry.momentum_transfer()
    rows = geometry.kept_rows()
    blocks = [rows[i : i + row_block_size] for i in range(0, rows.size, row_block_size)]

    matrix = np.zeros((n_rows, n_cols))
    with ThreadPoolExecutor(max_workers=max(1, max_workers)) as pool:
        results = pool.map(lambda idx: _kernel_rows(mol, s_vec[idx], positions, cell_weights, geometry.probe), blocks)
        for idx, values in zip(blocks, results):
            matrix[idx] = values

    logger.info(
        "kernel_built",
        rows=n_rows,
        kept_rows=int(rows.size),
        cols=n_cols,
        size_mib=round(size / 2**20, 2),
        probe=geometry.probe,
    )
    return KernelMatrix(matrix=matrix, geometry=geometry, grid=grid)
