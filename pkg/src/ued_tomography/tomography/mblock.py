"""Analytic inversion of one m-block from its blockwise probability.

Projecting Pr_{m1,m2} on P̃_α^{m1+m2} and Fourier filtering at the harmonic
β(α+1) leaves I(α, β) = Σ C^{α}_{J1 m1 J2 m2} ⟨J1 m1|ρ|J2 m2⟩ summed over the
pairs with (J1−J2)(J1+J2+1) = β(α+1) and J1 + J2 ≥ α.  Pairs sharing a
harmonic form a chain ordered by J = J1 + J2; probing each member at α = J
gives an upper-triangular system.  A chain of length one is a plain division.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import structlog
from scipy.linalg import solve_triangular as back_substitute

from ued_tomography.angular.coupling import expansion_coefficient
from ued_tomography.angular.legendre import LegendreTable, evaluate_legendre
from ued_tomography.errors import AmbiguousFactorizationError, ValidationError
from ued_tomography.tomography.blockwise import BlockwiseProbability, project_theta, time_fourier

logger = structlog.get_logger()

Pair = tuple[int, int]
_NONZERO = 1e-14
_RESIDUAL_TOLERANCE = 1e-8


def harmonic(J1: int, J2: int) -> int:
    """ΔJ (J + 1) with ΔJ = J1 − J2 and J = J1 + J2."""
    return (J1 - J2) * (J1 + J2 + 1)


def block_pairs(m1: int, m2: int, j_max: int) -> list[Pair]:
    return [(J1, J2) for J1 in range(abs(m1), j_max + 1) for J2 in range(abs(m2), j_max + 1)]


def contributing_pairs(alpha: int, n: int, m1: int, m2: int, j_max: int) -> list[Pair]:
    """Every (J1, J2) in the block whose term survives in I(α, β) with β(α+1) = n."""
    return [
        (J1, J2)
        for J1, J2 in block_pairs(m1, m2, j_max)
        if harmonic(J1, J2) == n and abs(expansion_coefficient(alpha, J1, m1, J2, m2)) > _NONZERO
    ]


def chain(n: int, m1: int, m2: int, j_max: int) -> list[Pair]:
    """Pairs of the block sharing harmonic ``n``, ordered by J1 + J2."""
    return sorted((p for p in block_pairs(m1, m2, j_max) if harmonic(*p) == n), key=sum)


def chain_truncated(n: int, m1: int, m2: int, j_max: int) -> bool:
    """True when pairs beyond ``j_max`` would join this chain."""
    if n == 0:
        return True
    for J in range(abs(n)):
        if n % (J + 1):
            continue
        delta = n // (J + 1)
        if abs(delta) > J or (J + delta) % 2:
            continue
        J1, J2 = (J + delta) // 2, (J - delta) // 2
        if J1 >= abs(m1) and J2 >= abs(m2) and max(J1, J2) > j_max:
            return True
    return False


@lru_cache(maxsize=None)
def warn_truncated_chain(n: int, m1: int, m2: int, j_max: int) -> None:
    """Logged once per process for each chain."""
    logger.warning("triangular_chain_truncated", harmonic=n, m1=m1, m2=m2, j_max=j_max)


@dataclass
class ChainSolution:
    """Result of back-substitution along one harmonic chain.

    Attributes:
        pairs: (J1, J2) in ascending J1 + J2.
        elements: Recovered ⟨J1 m1|ρ|J2 m2⟩ in the same order.
        residual: ‖A x − b‖ of the triangular system.
        truncated: Whether members beyond j_max were assumed zero.
    """

    pairs: list[Pair]
    elements: np.ndarray
    residual: float
    truncated: bool


def fourier_component(
    blockwise: BlockwiseProbability,
    alpha: int,
    beta: int,
    m1: int,
    m2: int,
    legendre: LegendreTable,
    strict: bool = True,
) -> complex:
    """I_{m1m2}(α, β) from the sampled blockwise probability."""
    series = project_theta(blockwise, alpha, m1, m2, legendre, strict)
    return time_fourier(series, beta, alpha, blockwise.inertia, blockwise.time_nodes, strict)


def solve_unique_factorization(value: complex, alpha: int, beta: int, m1: int, m2: int, j_max: int) -> complex:
    """⟨(α+β)/2, m1|ρ|(α−β)/2, m2⟩ = I(α, β)/C when no other element contributes.

    Raises:
        AmbiguousFactorizationError: If β = 0 or any other pair of the block
            shares the harmonic β(α+1) at this α.
        ValidationError: If α + β is odd or the target lies outside the block.
    """
    if beta == 0:
        raise AmbiguousFactorizationError("beta=0 is never unique: every diagonal term remains")
    if (alpha + beta) % 2:
        raise ValidationError(f"alpha+beta must be even, got alpha={alpha}, beta={beta}")
    target = ((alpha + beta) // 2, (alpha - beta) // 2)
    if target[0] < abs(m1) or target[1] < abs(m2) or max(target) > j_max:
        raise ValidationError(f"element {target} outside block ({m1}, {m2}) at j_max={j_max}")

    pairs = contributing_pairs(alpha, beta * (alpha + 1), m1, m2, j_max)
    if pairs != [target]:
        raise AmbiguousFactorizationError(f"harmonic {beta * (alpha + 1)} shared by {pairs} at alpha={alpha}")
    return value / expansion_coefficient(alpha, target[0], m1, target[1], m2)


def solve_triangular(values: np.ndarray, pairs: list[Pair], m1: int, m2: int, j_max: int) -> ChainSolution:
    """Back-substitute one harmonic chain.

    ``values[k]`` must be I(α_k, β_k) with α_k = J1_k + J2_k and β_k = J1_k − J2_k
    for the k-th pair in ascending J1 + J2.
    """
    order = [sum(p) for p in pairs]
    if order != sorted(order) or len(set(order)) != len(order):
        raise ValidationError("chain pairs must have strictly increasing J1 + J2")

    size = len(pairs)
    matrix = np.zeros((size, size))
    for k, alpha in enumerate(order):
        for col, (J1, J2) in enumerate(pairs):
            matrix[k, col] = expansion_coefficient(alpha, J1, m1, J2, m2)
    if np.any(np.abs(np.tril(matrix, -1)) > _NONZERO):
        raise ValidationError("chain system is not upper triangular")

    values = np.asarray(values, dtype=complex)
    elements = back_substitute(matrix, values, lower=False)
    residual = float(np.linalg.norm(matrix @ elements - values))
    if residual > _RESIDUAL_TOLERANCE * (1.0 + np.linalg.norm(values)):
        raise ValidationError(f"triangular residual {residual:.2e} above tolerance")

    n = harmonic(*pairs[0]) if pairs else 0
    truncated = chain_truncated(n, m1, m2, j_max)
    if truncated:
        warn_truncated_chain(n, m1, m2, j_max)
    return ChainSolution(pairs=pairs, elements=elements, residual=residual, truncated=truncated)


def invert_block(
    blockwise: BlockwiseProbability,
    m1: int,
    m2: int,
    j_max: int,
    legendre: LegendreTable | None = None,
    strict: bool = True,
) -> np.ndarray:
    """Recover ⟨J1 m1|ρ|J2 m2⟩ for J1 = |m1|..j_max, J2 = |m2|..j_max.

    ``strict=False`` lets undersampled θ or t grids through; the result is
    then only as good as the quadrature.
    """
    table = evaluate_legendre(2 * j_max, blockwise.grid) if legendre is None else legendre

    projections: dict[int, np.ndarray] = {}

    def component(alpha: int, beta: int) -> complex:
        if alpha not in projections:
            projections[alpha] = project_theta(blockwise, alpha, m1, m2, table, strict)
        return time_fourier(projections[alpha], beta, alpha, blockwise.inertia, blockwise.time_nodes, strict)

    groups: dict[int, list[Pair]] = defaultdict(list)
    for pair in block_pairs(m1, m2, j_max):
        groups[harmonic(*pair)].append(pair)

    result = np.zeros((j_max - abs(m1) + 1, j_max - abs(m2) + 1), dtype=complex)
    for n in sorted(groups):
        pairs = sorted(groups[n], key=sum)
        if len(pairs) == 1 and n != 0:
            J1, J2 = pairs[0]
            value = component(J1 + J2, J1 - J2)
            result[J1 - abs(m1), J2 - abs(m2)] = solve_unique_factorization(value, J1 + J2, J1 - J2, m1, m2, j_max)
            continue
        values = np.array([component(J1 + J2, J1 - J2) for J1, J2 in pairs])
        solution = solve_triangular(values, pairs, m1, m2, j_max)
        for (J1, J2), element in zip(solution.pairs, solution.elements):
            result[J1 - abs(m1), J2 - abs(m2)] = element
    return result
