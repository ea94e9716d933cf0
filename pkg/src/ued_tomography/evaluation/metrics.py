"""Reconstruction error metrics.

Both errors are normalized L1 distances, ε = Σ|x_n − x_ref| / Σ|x_ref|,
taken over every density-matrix element or every (t, φ, θ) sample of the
orientation probability.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np

from ued_tomography.errors import ValidationError


@dataclass
class ErrorMetrics:
    """ε_n(ρ̂) and ε_n(Pr) of one iterate; ``error_rho`` is None without a reference."""

    error_rho: float | None
    error_pr: float


def _as_array(value: Any) -> np.ndarray:
    if hasattr(value, "to_dense"):
        return value.to_dense()
    if hasattr(value, "values") and isinstance(value.values, np.ndarray):
        return value.values
    return np.asarray(value)


def relative_l1(value: Any, reference: Any) -> float:
    """Σ|value − reference| / Σ|reference|.

    Raises:
        ValidationError: On shape mismatch or a reference of zero norm.
    """
    a, b = _as_array(value), _as_array(reference)
    if a.shape != b.shape:
        raise ValidationError(f"shape mismatch: {a.shape} vs {b.shape}")
    norm = float(np.sum(np.abs(b)))
    if norm == 0.0:
        raise ValidationError("reference has zero norm")
    return float(np.sum(np.abs(a - b)) / norm)


def error_metrics(rho_n: Any, rho_ref: Any | None, pr_n: Any, pr_ref: Any) -> ErrorMetrics:
    """Errors of the n-th iterate against a reference state and probability.

    ``rho_ref`` may be the ground truth (simulation) or the previous iterate
    (experiment mode); ``None`` skips the density error.
    """
    error_rho = None if rho_ref is None else relative_l1(rho_n, rho_ref)
    return ErrorMetrics(error_rho=error_rho, error_pr=relative_l1(pr_n, pr_ref))


def format_metrics(history: list[Any], title: str = "Convergence") -> str:
    """Format an iteration history for terminal display.

    Args:
        history: Records with ``iteration``, ``error_rho`` and ``error_pr``.
        title: Heading line.

    Returns:
        Human-readable table, one row per iteration.
    """
    lines = [
        "",
        "=" * 50,
        f"  {title}",
        "=" * 50,
        f"  {'iter':>5s}  {'eps_rho':>12s}  {'eps_pr':>12s}",
        "-" * 50,
    ]
    for record in history:
        rho = "-" if record.error_rho is None else f"{record.error_rho:.4e}"
        lines.append(f"  {record.iteration:>5d}  {rho:>12s}  {record.error_pr:>12.4e}")
    lines += ["=" * 50, ""]
    return "\n".join(lines)
