"""Vibrational density matrices, position-probability movies and their blockwise split.

For separable modes with ω_i = r_i ω₀ the probability movie is

    Pr(x⃗, t) = Σ_Δ⃗ Pr_Δ⃗(x⃗) e^{ikω₀t},   k = Σ r_i Δ_i,
    Pr_Δ⃗(x⃗) = Σ_n⃗ ⟨n⃗|ρ|n⃗+Δ⃗⟩ Π_i φ_{n_i}(x_i) φ_{n_i+Δ_i}(x_i),

and ⟨n⃗|ρ|m⃗⟩ = ∫ Pr_{m⃗−n⃗}(x⃗) Π_i f_{m_i n_i}(x_i) dx⃗.  Where several
offsets share a frequency index k only their sum is measured.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import reduce

import numpy as np

from ued_tomography.errors import AliasingError, ValidationError
from ued_tomography.tomography.blockwise import check_period_sampling
from ued_tomography.vibrational.oscillator import OscillatorBasis, PatternFunctionTable, State


@dataclass
class VibrationalDensityMatrix:
    """Dense density matrix over the product basis ``basis.states()``.

    Attributes:
        basis: Modes and truncation.
        matrix: Complex (D, D) with D = (n_max+1)^N.
        reference_time: fs.
    """

    basis: OscillatorBasis
    matrix: np.ndarray
    reference_time: float = 0.0

    def __post_init__(self) -> None:
        size = len(self.basis.states())
        if self.matrix.shape != (size, size):
            raise ValidationError(f"matrix shape {self.matrix.shape} does not match basis dimension {size}")

    @classmethod
    def zeros(cls, basis: OscillatorBasis) -> VibrationalDensityMatrix:
        size = len(basis.states())
        return cls(basis=basis, matrix=np.zeros((size, size), dtype=complex))

    @classmethod
    def pure(cls, basis: OscillatorBasis, amplitudes: dict[State, complex]) -> VibrationalDensityMatrix:
        """|ψ⟩⟨ψ| with |ψ⟩ = Σ c_n⃗ |n⃗⟩, normalized."""
        index = {state: i for i, state in enumerate(basis.states())}
        vector = np.zeros(len(index), dtype=complex)
        for state, value in amplitudes.items():
            vector[index[tuple(state)]] = value
        norm = np.linalg.norm(vector)
        if norm == 0:
            raise ValidationError("state vector is zero")
        vector /= norm
        return cls(basis=basis, matrix=np.outer(vector, vector.conj()))

    @classmethod
    def product(cls, basis: OscillatorBasis, mode_matrices: list[np.ndarray]) -> VibrationalDensityMatrix:
        """ρ₁ ⊗ ρ₂ ⊗ … from single-mode matrices of size n_max+1."""
        if len(mode_matrices) != basis.mode_count:
            raise ValidationError("one matrix per mode is required")
        return cls(basis=basis, matrix=reduce(np.kron, [np.asarray(m, dtype=complex) for m in mode_matrices]))

    def like(self, matrix: np.ndarray) -> VibrationalDensityMatrix:
        return replace(self, matrix=matrix)

    def index(self, state: State) -> int:
        return self.basis.states().index(tuple(state))

    def element(self, n: State, m: State) -> complex:
        return complex(self.matrix[self.index(n), self.index(m)])

    def to_dense(self) -> np.ndarray:
        return self.matrix

    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T)))

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(0.5 * (self.matrix + self.matrix.conj().T))

    def energies(self) -> np.ndarray:
        """Σ r_i n_i ω₀ per basis state, rad/fs."""
        return self.basis.base_frequency * np.array([self.basis.energy(s) for s in self.basis.states()])

    def evolve(self, t: float) -> VibrationalDensityMatrix:
        gap = np.subtract.outer(self.energies(), self.energies())
        return replace(self, matrix=self.matrix * np.exp(-1j * gap * (t - self.reference_time)), reference_time=t)


@dataclass
class VibrationalMovie:
    """Pr(x⃗, t) sampled on the basis grid, values of shape (n_time, n_x, …, n_x)."""

    basis: OscillatorBasis
    time_nodes: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        n_x = self.basis.x_grid().size
        expected = (self.time_nodes.size,) + (n_x,) * self.basis.mode_count
        if self.values.shape != expected:
            raise ValidationError(f"movie shape {self.values.shape} does not match {expected}")

    def norms(self) -> np.ndarray:
        weight = self.basis.x_step**self.basis.mode_count
        return self.values.reshape(self.time_nodes.size, -1).sum(axis=1) * weight


@dataclass
class BlockwiseVibProbability:
    """Pr_Δ⃗(x⃗) per offset tuple, plus what the measurement fixes.

    Attributes:
        basis: Modes and truncation.
        blocks: Δ⃗ → complex array (n_x, …, n_x).
        components: k → measured Pr_k(x⃗); empty for synthesized blockwise data.
        shared: k → offsets whose sum equals ``components[k]``; offsets with
            a unique k are stored directly in ``blocks``.
    """

    basis: OscillatorBasis
    blocks: dict[State, np.ndarray]
    components: dict[int, np.ndarray] = field(default_factory=dict)
    shared: dict[int, list[State]] = field(default_factory=dict)

    def frequency_index(self, offset: State) -> int:
        return self.basis.frequency_index(offset)

    def family(self, k: int) -> list[State]:
        return [d for d in self.blocks if self.frequency_index(d) == k]

    def symmetry_error(self) -> float:
        """max |Pr_Δ⃗ − conj(Pr_{−Δ⃗})| over stored pairs."""
        worst = 0.0
        for offset, block in self.blocks.items():
            mirror = tuple(-d for d in offset)
            if mirror in self.blocks:
                worst = max(worst, float(np.max(np.abs(block - self.blocks[mirror].conj()))))
        return worst

    def like(self, blocks: dict[State, np.ndarray]) -> BlockwiseVibProbability:
        return replace(self, blocks=blocks)


def _outer(arrays: list[np.ndarray]) -> np.ndarray:
    return reduce(np.multiply.outer, arrays)


def synthesize_vib_blockwise(rho: VibrationalDensityMatrix, table: PatternFunctionTable) -> BlockwiseVibProbability:
    """Pr_Δ⃗(x⃗) of ``rho`` at its reference time for every offset Δ⃗."""
    basis = rho.basis
    states = basis.states()
    phi = table.regular
    shape = (table.x.size,) * basis.mode_count
    blocks = {offset: np.zeros(shape, dtype=complex) for offset in basis.offsets()}
    for i, n in enumerate(states):
        for j, m in enumerate(states):
            value = rho.matrix[i, j]
            if value == 0:
                continue
            offset = tuple(mi - ni for mi, ni in zip(m, n))
            blocks[offset] += value * _outer([phi[ni] * phi[mi] for ni, mi in zip(n, m)])
    return BlockwiseVibProbability(basis=basis, blocks=blocks)


def movie_from_blockwise(blockwise: BlockwiseVibProbability, time_nodes: np.ndarray) -> VibrationalMovie:
    """Pr(x⃗, t) = Σ_Δ⃗ Pr_Δ⃗ e^{ikω₀t}."""
    basis = blockwise.basis
    time_nodes = np.asarray(time_nodes, dtype=float)
    shape = next(iter(blockwise.blocks.values())).shape
    values = np.zeros((time_nodes.size,) + shape, dtype=complex)
    for offset, block in blockwise.blocks.items():
        phase = np.exp(1j * blockwise.frequency_index(offset) * basis.base_frequency * time_nodes)
        values += np.multiply.outer(phase, block)
    return VibrationalMovie(basis=basis, time_nodes=time_nodes, values=values.real)


def simulate_movie(
    rho: VibrationalDensityMatrix,
    time_nodes: np.ndarray,
    table: PatternFunctionTable,
) -> VibrationalMovie:
    """Position-probability movie of ``rho`` at ``time_nodes`` (fs)."""
    return movie_from_blockwise(synthesize_vib_blockwise(rho.evolve(0.0), table), time_nodes)


def period_time_nodes(basis: OscillatorBasis, n_time: int | None = None, start: float = 0.0) -> np.ndarray:
    """Uniform samples over one period T = 2π/ω₀, endpoint excluded."""
    n_time = basis.required_time_samples() + 1 if n_time is None else n_time
    return start + basis.period * np.arange(n_time) / n_time


def fourier_components(movie: VibrationalMovie, strict: bool = True) -> dict[int, np.ndarray]:
    """Pr_k = (1/T) ∫ e^{−ikω₀t} Pr dt for |k| ≤ n_max Σ r_i, by the rectangle rule.

    With ``strict=False`` an undersampled movie yields aliased components.

    Raises:
        AliasingError: If the time grid cannot separate the highest index.
        ValidationError: If the samples do not span one period uniformly.
    """
    basis = movie.basis
    check_period_sampling(movie.time_nodes, basis.period)
    k_max = basis.max_frequency_index()
    nyquist = (movie.time_nodes.size - 1) // 2
    if strict and k_max > nyquist:
        raise AliasingError(f"aliasing: frequency index {k_max} above Nyquist limit {nyquist}")
    components = {}
    for k in range(-k_max, k_max + 1):
        phase = np.exp(-1j * k * basis.base_frequency * movie.time_nodes)
        components[k] = np.tensordot(phase, movie.values, axes=(0, 0)) / movie.time_nodes.size
    return components


def blockwise_from_measurement(movie: VibrationalMovie, strict: bool = True) -> BlockwiseVibProbability:
    """Split a measured movie into frequency components and assign unique offsets."""
    basis = movie.basis
    components = fourier_components(movie, strict)
    blocks: dict[State, np.ndarray] = {}
    shared: dict[int, list[State]] = {}
    for k, component in components.items():
        offsets = basis.offsets_for_k(k)
        if len(offsets) == 1:
            blocks[offsets[0]] = component
        elif offsets:
            shared[k] = offsets
    return BlockwiseVibProbability(basis=basis, blocks=blocks, components=components, shared=shared)


def density_from_blockwise(
    blockwise: BlockwiseVibProbability,
    table: PatternFunctionTable,
) -> VibrationalDensityMatrix:
    """⟨n⃗|ρ|m⃗⟩ = ∫ Pr_{m⃗−n⃗} Π f_{m_i n_i}(x_i) dx⃗; offsets without a block give zero."""
    basis = blockwise.basis
    states = basis.states()
    weighted = table.values * table.weights[None, None, :]
    matrix = np.zeros((len(states), len(states)), dtype=complex)
    for i, n in enumerate(states):
        for j, m in enumerate(states):
            offset = tuple(mi - ni for mi, ni in zip(m, n))
            block = blockwise.blocks.get(offset)
            if block is None:
                continue
            value = block
            for mi, ni in zip(m, n):
                value = np.tensordot(weighted[mi, ni], value, axes=(0, 0))
            matrix[i, j] = value
    return VibrationalDensityMatrix(basis=basis, matrix=matrix)
