"""Evaluation harness for the reconstruction pipelines.

Runs desk-scale benchmark scenarios end to end, compares each error metric
against its acceptance threshold and prints a comparison table.  Every
scenario is a pure function of its ``PipelineConfig``, so sizes can be
reduced for quick checks or raised to the full benchmark.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from functools import partial
from typing import Callable

import numpy as np
import structlog

from ued_tomography.angular.grid import make_grid
from ued_tomography.config.pipeline import PipelineConfig
from ued_tomography.errors import DivergenceError, UEDTomographyError
from ued_tomography.inversion.lcurve import l_curve_scan, lambda_grid
from ued_tomography.pipeline import (
    invert_frames,
    kernel_for,
    mean_masked_frame,
    reconstruct_rotational,
    reconstruct_vibrational,
    simulate_rotational,
    simulate_vibrational,
)
from ued_tomography.tomography.resolution import resolution_requirements
from ued_tomography.vibrational.oscillator import OscillatorBasis

logger = structlog.get_logger()

EXPECTED_TURNING_POINT = 1e4
COARSE_ERROR_RATIO = 0.1


@dataclass
class ScenarioResult:
    """Outcome of one benchmark scenario.

    Attributes:
        name: Scenario label shown in the table.
        metrics: Metric name → measured value.
        thresholds: Metric name → largest acceptable value.
        iterations: Iterations run by the reconstruction, 0 if none.
        stop_reason: Why the reconstruction stopped, or the error message.
        runtime_s: Wall-clock time of the scenario.
    """

    name: str
    metrics: dict[str, float] = field(default_factory=dict)
    thresholds: dict[str, float] = field(default_factory=dict)
    iterations: int = 0
    stop_reason: str = ""
    runtime_s: float = 0.0

    @property
    def passed(self) -> bool:
        return all(
            np.isfinite(self.metrics.get(name, np.inf)) and self.metrics[name] <= limit
            for name, limit in self.thresholds.items()
        )


def _final_errors(history: list) -> dict[str, float]:
    last = history[-1]
    errors = {"eps_pr": last.error_pr}
    if last.error_rho is not None:
        errors["eps_rho"] = last.error_rho
    return errors


def _with_iteration(config: PipelineConfig, **changes: object) -> PipelineConfig:
    return config.model_copy(update={"iteration": config.iteration.model_copy(update=changes)})


def run_rotational_benchmark(config: PipelineConfig, name: str = "rotational benchmark") -> ScenarioResult:
    """Simulate the aligned ensemble and reconstruct it from its orientation movie."""
    sim = simulate_rotational(config)
    result = reconstruct_rotational(config, sim.distribution, reference=sim.rho)
    return ScenarioResult(
        name=name,
        metrics=_final_errors(result.history),
        thresholds={"eps_rho": 5e-2, "eps_pr": 1e-3},
        iterations=result.state.iteration,
        stop_reason=result.stop_reason,
    )


def run_random_trial(config: PipelineConfig, guess: str, iterations: int, eps_rho_max: float) -> ScenarioResult:
    """Recover the five-block test state from a given initial guess."""
    config = _with_iteration(config, initial_guess=guess, max_iterations=iterations)
    sim = simulate_rotational(config)
    result = reconstruct_rotational(config, sim.distribution, reference=sim.rho)
    return ScenarioResult(
        name=f"random trial ({guess} guess)",
        metrics=_final_errors(result.history),
        thresholds={"eps_rho": eps_rho_max},
        iterations=result.state.iteration,
        stop_reason=result.stop_reason,
    )


def run_tikhonov_diagnostics(config: PipelineConfig) -> ScenarioResult:
    """Condition numbers and L-curve turning point on the time-averaged benchmark frame."""
    sim = simulate_rotational(config)
    kernel = kernel_for(config, sim.dataset.geometry)
    rows, frame = mean_masked_frame(kernel, sim.dataset)
    reg = config.regularization
    report = l_curve_scan(
        kernel.matrix[rows],
        frame,
        lambda_grid(reg.lambda_min, reg.lambda_max, reg.n_lambda),
        condition_trials=max(reg.condition_trials, 1),
        cond_max=reg.cond_max,
        condition_noise=reg.condition_noise,
        seed=reg.seed,
    )
    conditions = report.condition_numbers
    regularized = report.lambda_grid >= 10.0
    worst_condition = float(np.max(conditions[regularized])) if np.any(regularized) else np.inf
    turning = report.turning_point_lambda
    decades = abs(np.log10(turning / EXPECTED_TURNING_POINT)) if turning is not None else np.inf
    return ScenarioResult(
        name="tikhonov diagnostics",
        metrics={"cond_lambda_ge_10": worst_condition, "turning_point_decades": float(decades)},
        thresholds={"cond_lambda_ge_10": reg.cond_max, "turning_point_decades": 1.0},
        stop_reason=f"turning point {turning}",
    )


def run_vibrational_benchmark(config: PipelineConfig) -> ScenarioResult:
    """Two commensurate modes reconstructed from their position-probability movie."""
    sim = simulate_vibrational(config)
    result = reconstruct_vibrational(config, sim.movie, reference=sim.rho, table=sim.table)
    return ScenarioResult(
        name="vibrational benchmark",
        metrics=_final_errors(result.history),
        thresholds={"eps_rho": 8e-2, "eps_pr": 6e-2},
        iterations=result.state.iteration,
        stop_reason=result.stop_reason,
    )


def run_experiment_smoke(config: PipelineConfig, photon_budget: float = 1e4) -> ScenarioResult:
    """Noisy frames → Tikhonov inversion → tomography without a reference state."""
    noisy = config.model_copy(update={"noise": config.noise.model_copy(update={"photon_budget": photon_budget})})
    sim = simulate_rotational(noisy)
    inverted = invert_frames(noisy, sim.dataset, sim.kernel)
    result = reconstruct_rotational(noisy, inverted.distribution)
    return ScenarioResult(
        name="experiment mode (noisy)",
        metrics={"eps_pr": result.history[-1].error_pr},
        thresholds={"eps_pr": 1e-1},
        iterations=result.state.iteration,
        stop_reason=result.stop_reason,
    )


def _with_grids(config: PipelineConfig, **changes: object) -> PipelineConfig:
    return config.model_copy(update={"grids": config.grids.model_copy(update=changes)})


def _with_vibrational(config: PipelineConfig, **changes: object) -> PipelineConfig:
    return config.model_copy(update={"vibrational": config.vibrational.model_copy(update=changes)})


def coarse_theta_count(config: PipelineConfig) -> int:
    """Most polar nodes whose widest spacing is still at least twice π/(2 j_max)."""
    _, theta_step = resolution_requirements(config.rotor.j_max, 1.0)
    for n_theta in range(config.grids.n_theta, 1, -1):
        grid = make_grid(n_theta, 1, config.grids.quadrature)
        if np.max(np.diff(grid.theta_nodes)) >= 2.0 * theta_step:
            return n_theta
    return 1


def _ratio(compliant: float, coarse: float) -> float:
    return compliant / coarse if coarse > 0 else np.inf


def _eps_rho(run: Callable[[], object]) -> float:
    try:
        history = run().history
    except DivergenceError as e:
        history = e.history
    if not history or history[-1].error_rho is None:
        return np.inf
    return float(history[-1].error_rho)


def run_resolution_study(config: PipelineConfig, iterations: int = 20) -> ScenarioResult:
    """Rotational ε(ρ̂) on the compliant grids against δt doubled and δθ doubled.

    Each metric is compliant/coarse, so a value at or below 0.1 means the coarse
    run is at least ten times worse.
    """
    config = _with_grids(_with_iteration(config, max_iterations=iterations), sampling_guard="warn")
    j_max = config.rotor.j_max
    variants = {
        "compliant": config,
        "dt": _with_grids(config, n_time=j_max * (j_max + 1)),
        "dtheta": _with_grids(config, n_theta=coarse_theta_count(config)),
    }

    def reconstruct(variant: PipelineConfig) -> object:
        sim = simulate_rotational(variant)
        return reconstruct_rotational(variant, sim.distribution, reference=sim.rho)

    eps = {label: _eps_rho(partial(reconstruct, variant)) for label, variant in variants.items()}
    logger.info("resolution_study_errors", kind="rotational", **eps)
    return ScenarioResult(
        name="rotational resolution study",
        metrics={
            "eps_rho_compliant": eps["compliant"],
            "eps_ratio_dt": _ratio(eps["compliant"], eps["dt"]),
            "eps_ratio_dtheta": _ratio(eps["compliant"], eps["dtheta"]),
        },
        thresholds={"eps_ratio_dt": COARSE_ERROR_RATIO, "eps_ratio_dtheta": COARSE_ERROR_RATIO},
        iterations=iterations,
        stop_reason=f"n_theta {variants['dtheta'].grids.n_theta}, n_time {variants['dt'].grids.n_time}",
    )


def run_vibrational_resolution_study(config: PipelineConfig) -> ScenarioResult:
    """Vibrational ε(ρ̂) on the compliant grids against δx doubled and δt doubled.

    Every run starts from the true state, so sampling is the only error source.
    """
    config = _with_grids(config, sampling_guard="warn")
    basis = OscillatorBasis.from_config(config.vibrational)
    x_bound = np.pi / (2.0 * np.sqrt(2 * basis.n_max + 1))
    variants = {
        "compliant": config,
        "dx": _with_vibrational(config, x_step=2.0 * x_bound),
        "dt": _with_vibrational(config, n_time=(basis.required_time_samples() + 1) // 2),
    }

    def reconstruct(variant: PipelineConfig) -> object:
        sim = simulate_vibrational(variant)
        return reconstruct_vibrational(variant, sim.movie, reference=sim.rho, table=sim.table, start=sim.rho)

    eps = {label: _eps_rho(partial(reconstruct, variant)) for label, variant in variants.items()}
    logger.info("resolution_study_errors", kind="vibrational", **eps)
    return ScenarioResult(
        name="vibrational resolution study",
        metrics={
            "eps_rho_compliant": eps["compliant"],
            "eps_ratio_dx": _ratio(eps["compliant"], eps["dx"]),
            "eps_ratio_dt": _ratio(eps["compliant"], eps["dt"]),
        },
        thresholds={"eps_ratio_dx": COARSE_ERROR_RATIO, "eps_ratio_dt": COARSE_ERROR_RATIO},
        iterations=config.iteration.max_iterations,
        stop_reason=f"x_step {variants['dx'].vibrational.x_step:.3f}, n_time {variants['dt'].vibrational.n_time}",
    )


def run_scenario(name: str, scenario: Callable[[], ScenarioResult]) -> ScenarioResult:
    """Time one scenario; package errors become a failed row instead of aborting the sweep."""
    log = logger.bind(scenario=name)
    log.info("scenario_started")
    started = time.perf_counter()
    try:
        result = scenario()
    except UEDTomographyError as e:
        log.error("scenario_failed", error=str(e))
        result = ScenarioResult(name=name, thresholds={"error": 0.0}, stop_reason=f"{type(e).__name__}: {e}")
    result.runtime_s = time.perf_counter() - started
    log.info("scenario_finished", passed=result.passed, runtime_s=round(result.runtime_s, 2), **result.metrics)
    return result


def run_benchmarks(
    rotational: PipelineConfig | None = None,
    random_trial: PipelineConfig | None = None,
    vibrational: PipelineConfig | None = None,
) -> list[ScenarioResult]:
    """Run every scenario whose config is given and print the results table."""
    scenarios: list[tuple[str, Callable[[], ScenarioResult]]] = []
    if rotational is not None:
        scenarios.append(("rotational benchmark", lambda: run_rotational_benchmark(rotational)))
        scenarios.append(("tikhonov diagnostics", lambda: run_tikhonov_diagnostics(rotational)))
    if random_trial is not None:
        scenarios += [
            ("random trial (diagonal guess)", partial(run_random_trial, random_trial, "diagonal", 20, 1e-2)),
            ("random trial (random guess)", partial(run_random_trial, random_trial, "random", 30, 8e-2)),
        ]
        scenarios.append(("experiment mode (noisy)", lambda: run_experiment_smoke(random_trial)))
        scenarios.append(("rotational resolution study", lambda: run_resolution_study(random_trial)))
    if vibrational is not None:
        scenarios.append(("vibrational benchmark", lambda: run_vibrational_benchmark(vibrational)))
        scenarios.append(("vibrational resolution study", lambda: run_vibrational_resolution_study(vibrational)))

    results = [run_scenario(name, scenario) for name, scenario in scenarios]
    print(format_results(results))
    return results


def format_results(results: list[ScenarioResult]) -> str:
    """Comparison table, one row per metric."""
    lines = [
        "",
        "=" * 96,
        "  Benchmark Results",
        "=" * 96,
        f"  {'Scenario':<32s}  {'Metric':<22s}  {'Value':>10s}  {'Limit':>10s}  {'Iter':>4s}  {'Time':>7s}  {'':4s}",
        "-" * 96,
    ]
    for r in results:
        status = "ok" if r.passed else "FAIL"
        if not r.metrics:
            lines.append(f"  {r.name:<32s}  {r.stop_reason[:60]:<60s}  {status:4s}")
            continue
        for i, (metric, value) in enumerate(r.metrics.items()):
            limit = r.thresholds.get(metric)
            limit_text = f"{limit:>10.2e}" if limit is not None else f"{'-':>10s}"
            label = r.name if i == 0 else ""
            tail = f"{r.iterations:>4d}  {r.runtime_s:>6.1f}s  {status:4s}" if i == 0 else ""
            lines.append(f"  {label:<32s}  {metric:<22s}  {value:>10.3e}  {limit_text}  {tail}")
    lines += ["=" * 96, ""]
    return "\n".join(lines)
