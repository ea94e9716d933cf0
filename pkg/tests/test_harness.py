"""Tests for the benchmark harness."""

import pytest

from ued_tomography.angular.grid import make_grid
from ued_tomography.config.pipeline import GridConfig, PipelineConfig, RotorConfig, load_pipeline_config
from ued_tomography.errors import AliasingError
from ued_tomography.evaluation.harness import (
    ScenarioResult,
    coarse_theta_count,
    format_results,
    run_benchmarks,
    run_experiment_smoke,
    run_random_trial,
    run_resolution_study,
    run_rotational_benchmark,
    run_scenario,
    run_tikhonov_diagnostics,
    run_vibrational_benchmark,
    run_vibrational_resolution_study,
)
from ued_tomography.tomography.blockwise import max_resolvable_order


class TestScenarioResult:
    def test_passed_within_limits(self):
        result = ScenarioResult(name="a", metrics={"eps_rho": 0.01}, thresholds={"eps_rho": 0.05})
        assert result.passed

    def test_failed_above_limit(self):
        result = ScenarioResult(name="a", metrics={"eps_rho": 0.1}, thresholds={"eps_rho": 0.05})
        assert not result.passed

    def test_missing_or_nan_metric_fails(self):
        """A threshold without a finite measured value is a failure."""
        assert not ScenarioResult(name="a", metrics={}, thresholds={"eps_pr": 1.0}).passed
        assert not ScenarioResult(name="a", metrics={"eps_pr": float("nan")}, thresholds={"eps_pr": 1.0}).passed


class TestRunScenario:
    def test_timing(self):
        result = run_scenario("quick", lambda: ScenarioResult(name="quick", metrics={"x": 0.0}, thresholds={"x": 1.0}))
        assert result.passed
        assert result.runtime_s >= 0.0

    def test_package_error_becomes_row(self):
        """A package error is reported as a failed row with its message."""

        def broken() -> ScenarioResult:
            raise AliasingError("frequency index 8 above Nyquist limit 4")

        result = run_scenario("broken", broken)
        assert not result.passed
        assert result.stop_reason.startswith("AliasingError")

    def test_other_errors_propagate(self):
        def broken() -> ScenarioResult:
            raise KeyError("bug")

        with pytest.raises(KeyError):
            run_scenario("broken", broken)

    def test_no_scenarios(self, capsys):
        assert run_benchmarks() == []
        assert "Benchmark Results" in capsys.readouterr().out


class TestCoarseGrids:
    def test_coarse_theta_count(self):
        """Three Gauss nodes are the most whose spacing is at least twice π/8 for j_max = 4."""
        config = PipelineConfig(rotor=RotorConfig(j_max=4), grids=GridConfig(n_theta=20))
        n_theta = coarse_theta_count(config)
        assert n_theta == 3
        assert max_resolvable_order(make_grid(n_theta, 1)) < 4


class TestFormatResults:
    def test_rows(self):
        results = [
            ScenarioResult(name="good", metrics={"eps_rho": 0.01, "eps_pr": 1e-4}, thresholds={"eps_rho": 0.05}),
            ScenarioResult(name="bad", thresholds={"error": 0.0}, stop_reason="ResolutionError: grid too coarse"),
        ]
        output = format_results(results)
        assert "good" in output
        assert "1.000e-02" in output
        assert "5.00e-02" in output
        assert "ResolutionError: grid too coarse" in output
        assert "FAIL" in output


@pytest.mark.slow
class TestAcceptance:
    def test_random_trial_diagonal_guess(self, config_dir):
        """Twenty iterations from the diagonal guess give ε(ρ̂) ≤ 1e−2."""
        config = load_pipeline_config(config_dir / "random_state.yaml")
        assert run_random_trial(config, "diagonal", 20, 1e-2).passed

    def test_random_trial_random_guess(self, config_dir):
        """Thirty iterations from a random guess give ε(ρ̂) ≤ 8e−2."""
        config = load_pipeline_config(config_dir / "random_state.yaml")
        assert run_random_trial(config, "random", 30, 8e-2).passed

    def test_vibrational_benchmark(self, config_dir):
        """Ten iterations give ε(ρ̂) ≤ 8e−2 and ε(Pr) ≤ 6e−2."""
        assert run_vibrational_benchmark(load_pipeline_config(config_dir / "vibrational_2d.yaml")).passed

    def test_n2_benchmark(self, config_dir):
        assert run_rotational_benchmark(load_pipeline_config(config_dir / "n2_benchmark.yaml")).passed

    def test_tikhonov_diagnostics(self, config_dir):
        """Condition numbers stay ≤ 10 for λ ≥ 10 and the turning point is near 1e4."""
        assert run_tikhonov_diagnostics(load_pipeline_config(config_dir / "n2_benchmark.yaml")).passed

    def test_experiment_smoke(self, config_dir):
        """Noisy frames run through inversion and tomography without a reference."""
        result = run_experiment_smoke(load_pipeline_config(config_dir / "random_state.yaml"))
        assert result.iterations >= 1

    def test_rotational_resolution_study(self, config_dir):
        """Doubling δt or δθ past its bound makes ε(ρ̂) at least ten times worse."""
        result = run_resolution_study(load_pipeline_config(config_dir / "random_state.yaml"))
        assert result.passed
        assert result.metrics["eps_ratio_dt"] <= 0.1
        assert result.metrics["eps_ratio_dtheta"] <= 0.1

    def test_vibrational_resolution_study(self, config_dir):
        """Doubling δx or δt past its bound makes ε(ρ̂) at least ten times worse."""
        result = run_vibrational_resolution_study(load_pipeline_config(config_dir / "vibrational_2d.yaml"))
        assert result.passed
        assert result.metrics["eps_ratio_dx"] <= 0.1
        assert result.metrics["eps_ratio_dt"] <= 0.1
