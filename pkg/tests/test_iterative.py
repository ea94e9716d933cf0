"""Tests for the rotational tomography loop."""

import numpy as np
import pytest
from structlog.testing import capture_logs

from ued_tomography.config.pipeline import IterationConfig
from ued_tomography.errors import AliasingError, DivergenceError, ValidationError
from ued_tomography.rotor.density import diagonal_keys
from ued_tomography.rotor.synthesis import synthesize_probability
from ued_tomography.tomography import iterative
from ued_tomography.tomography.blockwise import period_time_nodes
from ued_tomography.tomography.iterative import (
    IterationRecord,
    diagonal_density,
    has_plateaued,
    initial_guess,
    measured_components,
    qt_iterate,
    random_trial_state,
)
from ued_tomography.tomography.resolution import required_time_samples


@pytest.fixture
def measured(trial_state, grid, legendre):
    """Noiseless orientation movie of the trial state over one period."""
    return synthesize_probability(trial_state, grid, period_time_nodes(1.0, required_time_samples(4)), legendre)


def record(iteration: int, error_pr: float) -> IterationRecord:
    return IterationRecord(
        iteration=iteration, error_rho=None, error_pr=error_pr, min_eigenvalue=0.0, hio_converged=True
    )


class TestTrialState:
    def test_structure(self):
        """Five rank-one diagonal blocks with unit total trace."""
        rho = random_trial_state(2.0)
        assert rho.keys == [(m, m) for m in range(-2, 3)]
        assert rho.trace() == pytest.approx(1.0)
        assert rho.rotational_constant == 2.0
        for key in rho.keys:
            assert np.linalg.matrix_rank(rho.block(*key), tol=1e-12) == 1
        assert rho.element(1, 0, 0, 0) == pytest.approx(6.0 / 42.0)
        assert rho.element(4, 2, 2, 2) == pytest.approx(2.0 / 84.0)


class TestInitialGuess:
    def test_thermal(self, n2_spec):
        """The thermal guess is diagonal with unit trace."""
        rho = initial_guess("thermal", 12, spec=n2_spec)
        assert rho.trace() == pytest.approx(1.0)
        assert np.count_nonzero(rho.block(0, 0) - np.diag(np.diag(rho.block(0, 0)))) == 0

    def test_diagonal_keeps_populations(self, trial_state):
        """The diagonal guess keeps the reference populations only."""
        rho = initial_guess("diagonal", 4, reference=trial_state)
        np.testing.assert_allclose(np.diag(rho.block(0, 0)), np.diag(trial_state.block(0, 0)))
        assert rho.element(1, 0, 0, 0) == 0j
        assert rho.keys == diagonal_keys(4)

    def test_random_is_seeded(self):
        """The random guess is reproducible and normalized."""
        a = initial_guess("random", 3, rotational_constant=1.0, seed=8)
        b = initial_guess("random", 3, rotational_constant=1.0, seed=8)
        np.testing.assert_array_equal(a.block(1, 1), b.block(1, 1))
        assert a.trace() == pytest.approx(1.0)

    @pytest.mark.parametrize(
        "kind, kwargs, message",
        [
            ("thermal", {}, "rotor spec"),
            ("diagonal", {}, "reference"),
            ("random", {}, "rotational constant"),
            ("flat", {}, "unknown"),
        ],
    )
    def test_missing_inputs(self, kind, kwargs, message):
        """Each kind names the input it lacks."""
        with pytest.raises(ValidationError, match=message):
            initial_guess(kind, 2, **kwargs)

    def test_diagonal_density_pattern(self, trial_state):
        """diagonal_density can widen the block pattern."""
        rho = diagonal_density(trial_state, [(0, 0), (0, 1), (1, 0)])
        assert not np.any(rho.block(0, 1))


class TestStoppingRules:
    def test_plateau(self):
        """A flat error over the window counts as a plateau."""
        history = [record(i, 0.1) for i in range(1, 7)]
        assert has_plateaued(history, 5, 1e-6)
        assert not has_plateaued(history[:5], 5, 1e-6)
        falling = [record(i, 0.1 / i) for i in range(1, 7)]
        assert not has_plateaued(falling, 5, 1e-6)

    def test_components_per_coherence(self, measured):
        """One measured component per coherence index of the pattern."""
        components = measured_components(measured, [(0, 0), (1, 0), (0, 1)])
        assert sorted(components) == [-1, 0, 1]
        assert components[0].shape == (measured.time_nodes.size, measured.grid.n_theta)


class TestQTIterate:
    def test_exact_start_stops_at_floor(self, trial_state, measured, legendre):
        """Starting from the true state the first iterate already meets the error floor."""
        config = IterationConfig(max_iterations=5, error_floor=1e-8)
        result = qt_iterate(
            trial_state, measured, config, trial_state.partial_traces(), reference_rho=trial_state, legendre=legendre
        )
        assert result.stop_reason == "error_floor"
        assert result.state.iteration == 1
        assert result.history[0].error_rho < 1e-6
        assert not result.experiment_mode

    def test_diagonal_guess_runs(self, trial_state, measured, legendre):
        """A few iterations from the diagonal guess give a physical state and a full history."""
        config = IterationConfig(max_iterations=3)
        start = initial_guess("diagonal", 4, reference=trial_state)
        result = qt_iterate(start, measured, config, trial_state.partial_traces(), trial_state, legendre)
        assert [r.iteration for r in result.history] == [1, 2, 3]
        assert result.stop_reason == "max_iterations"
        assert result.rho.trace() == pytest.approx(1.0)
        assert result.rho.eigenvalues().min() >= -1e-8
        assert all(np.isfinite(r.error_pr) for r in result.history)

    def test_experiment_mode(self, trial_state, measured, legendre):
        """Without a reference the density error compares successive iterates."""
        start = initial_guess("diagonal", 4, reference=trial_state)
        result = qt_iterate(start, measured, IterationConfig(max_iterations=2), legendre=legendre)
        assert result.experiment_mode
        assert result.history[-1].error_rho is not None

    def test_divergence_carries_history(self, trial_state, measured, legendre, monkeypatch):
        """A jump of ε(Pr) above ten times its minimum aborts with the history so far."""
        errors = iter([1.0, 0.5, 20.0, 0.5])
        monkeypatch.setattr(iterative, "relative_l1", lambda *_: next(errors))
        start = initial_guess("diagonal", 4, reference=trial_state)
        with pytest.raises(DivergenceError) as excinfo:
            qt_iterate(start, measured, IterationConfig(max_iterations=5), legendre=legendre)
        assert [r.error_pr for r in excinfo.value.history] == [1.0, 20.0]
        assert excinfo.value.exit_code == 3

    def test_wrong_time_grid(self, trial_state, grid, legendre):
        """A movie that does not span one period is rejected."""
        short = synthesize_probability(trial_state, grid, np.linspace(0.0, 1.0, 41), legendre)
        with pytest.raises(ValidationError, match="one period"):
            qt_iterate(trial_state, short, IterationConfig(max_iterations=1), legendre=legendre)

    def test_undersampled_movie_needs_relaxed_guard(self, trial_state, grid, legendre):
        """Twenty samples per period alias j_max = 4; the relaxed guard runs anyway and warns."""
        coarse = synthesize_probability(trial_state, grid, period_time_nodes(1.0, 20), legendre)
        config = IterationConfig(max_iterations=1)
        with pytest.raises(AliasingError):
            qt_iterate(trial_state, coarse, config, legendre=legendre)
        with capture_logs() as logs:
            result = qt_iterate(trial_state, coarse, config, legendre=legendre, strict=False)
        assert len(result.history) == 1
        relaxed = [e["log_level"] for e in logs if e["event"] == "sampling_bounds_relaxed"]
        assert relaxed == ["warning"]

    @pytest.mark.slow
    def test_diagonal_guess_converges(self, trial_state, measured, legendre):
        """Twenty iterations from the diagonal guess reach ε(ρ̂) ≤ 1e−2."""
        start = initial_guess("diagonal", 4, reference=trial_state)
        config = IterationConfig(max_iterations=20)
        result = qt_iterate(start, measured, config, trial_state.partial_traces(), trial_state, legendre)
        assert result.history[-1].error_rho <= 1e-2
