"""Block-sparse rotational density matrix.

Elements ⟨J1 m1|ρ|J2 m2⟩ are grouped into blocks keyed by (m1, m2); block
rows run over J1 = |m1| .. j_max and columns over J2 = |m2| .. j_max.  Only
the blocks present in ``blocks`` are structurally nonzero; linearly polarized
alignment of a thermal state populates the Δm = 0 blocks alone.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ued_tomography.errors import ValidationError

BlockKey = tuple[int, int]


def rotor_energies(j_max: int, rotational_constant: float, centrifugal_distortion: float = 0.0) -> np.ndarray:
    """E_J = B J(J+1) − D J²(J+1)² for J = 0 .. j_max, in rad/ps."""
    J = np.arange(j_max + 1, dtype=float)
    jj = J * (J + 1)
    return rotational_constant * jj - centrifugal_distortion * jj * jj


def diagonal_keys(j_max: int) -> list[BlockKey]:
    return [(m, m) for m in range(-j_max, j_max + 1)]


@dataclass
class RotationalDensityMatrix:
    """Density matrix of a linear rotor at ``reference_time``.

    Attributes:
        j_max: Truncation of the rotational basis.
        blocks: (m1, m2) → complex array of shape (j_max−|m1|+1, j_max−|m2|+1).
        reference_time: Time (ps) at which the elements are given.
        rotational_constant: B in rad/ps; sets the free evolution.
        centrifugal_distortion: D in rad/ps.
    """

    j_max: int
    blocks: dict[BlockKey, np.ndarray] = field(default_factory=dict)
    reference_time: float = 0.0
    rotational_constant: float = 0.0
    centrifugal_distortion: float = 0.0

    def __post_init__(self) -> None:
        for (m1, m2), block in self.blocks.items():
            expected = (self.j_max - abs(m1) + 1, self.j_max - abs(m2) + 1)
            if abs(m1) > self.j_max or abs(m2) > self.j_max or block.shape != expected:
                raise ValidationError(f"block {(m1, m2)} has shape {block.shape}, expected {expected}")

    # ------------------------------------------------------------------
    # Construction
    # ------------------------------------------------------------------

    @classmethod
    def zeros(cls, j_max: int, keys: list[BlockKey] | None = None, **kwargs: float) -> RotationalDensityMatrix:
        keys = diagonal_keys(j_max) if keys is None else keys
        blocks = {
            (m1, m2): np.zeros((j_max - abs(m1) + 1, j_max - abs(m2) + 1), dtype=complex) for m1, m2 in keys
        }
        return cls(j_max=j_max, blocks=blocks, **kwargs)

    def like(self, blocks: dict[BlockKey, np.ndarray]) -> RotationalDensityMatrix:
        """Same basis and evolution parameters, new elements."""
        return replace(self, blocks=blocks)

    def copy(self) -> RotationalDensityMatrix:
        return self.like({key: block.copy() for key, block in self.blocks.items()})

    # ------------------------------------------------------------------
    # Indexing
    # ------------------------------------------------------------------

    @property
    def keys(self) -> list[BlockKey]:
        return sorted(self.blocks)

    def block(self, m1: int, m2: int) -> np.ndarray:
        if (m1, m2) in self.blocks:
            return self.blocks[(m1, m2)]
        return np.zeros((self.j_max - abs(m1) + 1, self.j_max - abs(m2) + 1), dtype=complex)

    def element(self, J1: int, m1: int, J2: int, m2: int) -> complex:
        if J1 < abs(m1) or J2 < abs(m2) or J1 > self.j_max or J2 > self.j_max:
            return 0j
        return complex(self.block(m1, m2)[J1 - abs(m1), J2 - abs(m2)])

    def basis(self) -> list[tuple[int, int]]:
        """Dense ordering of (J, m): m ascending, then J ascending."""
        return [(J, m) for m in range(-self.j_max, self.j_max + 1) for J in range(abs(m), self.j_max + 1)]

    def _offsets(self) -> dict[int, int]:
        offsets, position = {}, 0
        for m in range(-self.j_max, self.j_max + 1):
            offsets[m] = position
            position += self.j_max - abs(m) + 1
        return offsets

    @property
    def dimension(self) -> int:
        return (self.j_max + 1) ** 2

    def to_dense(self) -> np.ndarray:
        dense = np.zeros((self.dimension, self.dimension), dtype=complex)
        offsets = self._offsets()
        for (m1, m2), block in self.blocks.items():
            r, c = offsets[m1], offsets[m2]
            dense[r : r + block.shape[0], c : c + block.shape[1]] = block
        return dense

    def from_dense(self, dense: np.ndarray) -> RotationalDensityMatrix:
        """Cut ``dense`` back into this matrix's block pattern."""
        offsets = self._offsets()
        blocks = {}
        for m1, m2 in self.blocks:
            r, c = offsets[m1], offsets[m2]
            n1, n2 = self.j_max - abs(m1) + 1, self.j_max - abs(m2) + 1
            blocks[(m1, m2)] = dense[r : r + n1, c : c + n2].copy()
        return self.like(blocks)

    # ------------------------------------------------------------------
    # Physical properties
    # ------------------------------------------------------------------

    def energies(self) -> np.ndarray:
        return rotor_energies(self.j_max, self.rotational_constant, self.centrifugal_distortion)

    def trace(self) -> float:
        return float(sum(np.trace(self.block(m, m)).real for m in range(-self.j_max, self.j_max + 1)))

    def hermiticity_error(self) -> float:
        dense = self.to_dense()
        return float(np.max(np.abs(dense - dense.conj().T), initial=0.0))

    def eigenvalues(self) -> np.ndarray:
        dense = self.to_dense()
        return np.linalg.eigvalsh(0.5 * (dense + dense.conj().T))

    def partial_traces(self) -> dict[tuple[int, int], float]:
        """Σ_J ⟨J m|ρ|J m⟩ for each class (m, J mod 2)."""
        result = {}
        for m in range(-self.j_max, self.j_max + 1):
            diag = np.diag(self.block(m, m)).real
            J = np.arange(abs(m), self.j_max + 1)
            for parity in (0, 1):
                result[(m, parity)] = float(diag[J % 2 == parity].sum())
        return result

    def evolve(self, t: float) -> RotationalDensityMatrix:
        """Free evolution to time ``t``: ρ_{J1 J2} e^{−i(E_{J1}−E_{J2})(t − t_ref)}."""
        energies = self.energies()
        dt = t - self.reference_time
        blocks = {}
        for (m1, m2), block in self.blocks.items():
            e1 = energies[abs(m1) :]
            e2 = energies[abs(m2) :]
            blocks[(m1, m2)] = block * np.exp(-1j * np.subtract.outer(e1, e2) * dt)
        return replace(self, blocks=blocks, reference_time=t)
