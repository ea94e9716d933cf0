"""L-curve scan for the Tikhonov parameter.

Residual and solution norms follow in closed form from one SVD of K.  The
turning point is a heuristic: the largest positive Menger curvature of the
(log residual, log norm) polyline traversed in increasing λ.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import structlog

from ued_tomography.config.pipeline import RegularizationConfig
from ued_tomography.errors import ValidationError
from ued_tomography.inversion.tikhonov import condition_number

logger = structlog.get_logger()

MIN_LAMBDA_POINTS = 10


@dataclass
class RegularizationReport:
    """Result of an L-curve scan.

    Attributes:
        lambda_grid: Increasing λ values.
        residual_norms: ‖I − K Pr_λ‖²₂ per λ.
        solution_norms: ‖Pr_λ‖²₂ per λ.
        curvature: Signed Menger curvature per λ (NaN at the ends).
        condition_numbers: Empirical cond per λ, or None when not computed.
        turning_point_lambda: λ at the maximum positive curvature; None when
            the curve has no corner.
        selected_lambda: Turning point, or the smallest λ as fallback.
        admissible_band: (λ_low, λ_high) with λ_low the smallest λ meeting
            the condition bound and λ_high the turning point; None if empty.
    """

    lambda_grid: np.ndarray
    residual_norms: np.ndarray
    solution_norms: np.ndarray
    curvature: np.ndarray
    condition_numbers: np.ndarray | None
    turning_point_lambda: float | None
    selected_lambda: float
    admissible_band: tuple[float, float] | None


def lambda_grid(lambda_min: float, lambda_max: float, n: int) -> np.ndarray:
    if lambda_min <= 0 or lambda_max <= lambda_min:
        raise ValidationError("lambda grid needs 0 < lambda_min < lambda_max")
    if n < MIN_LAMBDA_POINTS:
        raise ValidationError(f"lambda grid needs at least {MIN_LAMBDA_POINTS} points, got {n}")
    return np.logspace(np.log10(lambda_min), np.log10(lambda_max), n)


def _check_grid(grid: np.ndarray) -> None:
    if grid.size < MIN_LAMBDA_POINTS:
        raise ValidationError(f"lambda grid needs at least {MIN_LAMBDA_POINTS} points, got {grid.size}")
    if np.any(grid <= 0) or np.any(np.diff(grid) <= 0):
        raise ValidationError("lambda grid must be positive and strictly increasing")
    ratios = np.diff(np.log(grid))
    if not np.allclose(ratios, ratios[0], rtol=1e-6):
        raise ValidationError("lambda grid must be log-spaced")


def menger_curvature(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Signed curvature of the circle through consecutive triples; positive for left turns."""
    curvature = np.full(x.size, np.nan)
    for i in range(1, x.size - 1):
        ax, ay = x[i] - x[i - 1], y[i] - y[i - 1]
        bx, by = x[i + 1] - x[i - 1], y[i + 1] - y[i - 1]
        cross = ax * by - ay * bx
        lengths = np.hypot(ax, ay) * np.hypot(x[i + 1] - x[i], y[i + 1] - y[i]) * np.hypot(bx, by)
        curvature[i] = 2.0 * cross / lengths if lengths > 0 else 0.0
    return curvature


def l_curve_norms(matrix: np.ndarray, frame: np.ndarray, grid: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Squared residual and solution norms for every λ from one SVD."""
    u, s, _ = np.linalg.svd(matrix, full_matrices=False)
    beta = u.T @ frame
    outside = max(float(frame @ frame - beta @ beta), 0.0)
    s2 = s[None, :] ** 2
    lam = grid[:, None]
    solution = np.sum((s[None, :] * beta[None, :] / (s2 + lam)) ** 2, axis=1)
    residual = np.sum((lam * beta[None, :] / (s2 + lam)) ** 2, axis=1) + outside
    return residual, solution


def l_curve_scan(
    matrix: np.ndarray,
    frame: np.ndarray,
    grid: np.ndarray,
    condition_trials: int = 0,
    cond_max: float = 10.0,
    condition_noise: float = 0.01,
    seed: int = 0,
) -> RegularizationReport:
    """Trace the L-curve and pick the turning point.

    With ``condition_trials`` > 0 the empirical condition number is
    estimated at every λ and the admissible band is bounded below by the
    first λ with cond ≤ ``cond_max``.
    """
    grid = np.asarray(grid, dtype=float)
    _check_grid(grid)
    matrix = np.asarray(matrix, dtype=float)
    frame = np.asarray(frame, dtype=float)
    residual, solution = l_curve_norms(matrix, frame, grid)

    with np.errstate(divide="ignore"):
        curvature = menger_curvature(np.log(residual), np.log(solution))
    interior = np.where(np.isfinite(curvature), curvature, -np.inf)
    corner = int(np.argmax(interior))
    if interior[corner] > 0:
        turning: float | None = float(grid[corner])
        selected = turning
    else:
        turning = None
        selected = float(grid[0])
        logger.warning("lcurve_fallback", reason="no positive curvature", selected_lambda=selected)

    conditions = None
    lower = float(grid[0])
    if condition_trials > 0:
        conditions = np.array(
            [
                condition_number(matrix, lam, frame, condition_noise, condition_trials, seed).mean
                for lam in grid
            ]
        )
        meeting = np.flatnonzero(conditions <= cond_max)
        lower = float(grid[meeting[0]]) if meeting.size else float("inf")

    band = None
    if turning is not None and lower <= turning:
        band = (lower, turning)
    logger.info("lcurve_scanned", points=grid.size, turning_point=turning, selected=selected, band=band)
    return RegularizationReport(
        lambda_grid=grid,
        residual_norms=residual,
        solution_norms=solution,
        curvature=curvature,
        condition_numbers=conditions,
        turning_point_lambda=turning,
        selected_lambda=selected,
        admissible_band=band,
    )


def select_lambda(
    config: RegularizationConfig,
    matrix: np.ndarray,
    frame: np.ndarray,
) -> tuple[float, RegularizationReport | None]:
    """λ according to the configured policy; the report is None for a fixed λ."""
    if config.policy == "fixed":
        return config.lambda_value, None
    report = l_curve_scan(
        matrix,
        frame,
        lambda_grid(config.lambda_min, config.lambda_max, config.n_lambda),
        condition_trials=config.condition_trials,
        cond_max=config.cond_max,
        condition_noise=config.condition_noise,
        seed=config.seed,
    )
    return report.selected_lambda, report
