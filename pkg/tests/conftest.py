"""Shared test fixtures."""

from pathlib import Path

import pytest

from ued_tomography.angular.grid import AngularGrid, make_grid
from ued_tomography.angular.legendre import LegendreTable, evaluate_legendre
from ued_tomography.config.pipeline import PipelineConfig, RotorConfig, VibrationalConfig
from ued_tomography.config.settings import get_settings
from ued_tomography.diffraction.geometry import MoleculeGeometry
from ued_tomography.rotor.model import RotorSpec
from ued_tomography.tomography.iterative import random_trial_state
from ued_tomography.vibrational.oscillator import OscillatorBasis, PatternFunctionTable, build_pattern_table

# Shipped pipeline configs
CONFIG_DIR = Path(__file__).resolve().parents[1] / "config"


@pytest.fixture(autouse=True)
def fresh_settings(monkeypatch, tmp_path):
    """Point the output root at a temp dir and drop cached settings around each test."""
    monkeypatch.setenv("UED_TOMOGRAPHY_OUTPUT_ROOT", str(tmp_path / "runs"))
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture
def config_dir() -> Path:
    return CONFIG_DIR


@pytest.fixture
def grid() -> AngularGrid:
    """Gauss grid exact for products of degree up to 4 * 4."""
    return make_grid(20, 8)


@pytest.fixture
def legendre(grid) -> LegendreTable:
    """Legendre table to order 8 on the default test grid."""
    return evaluate_legendre(8, grid)


@pytest.fixture
def n2_spec() -> RotorSpec:
    """Nitrogen rotor at 30 K with the default config values."""
    return RotorSpec.from_config(RotorConfig())


@pytest.fixture
def trial_state():
    """Five-block test state with B = 1 rad/ps."""
    return random_trial_state(1.0)


@pytest.fixture
def n2_molecule() -> MoleculeGeometry:
    """Homonuclear diatomic along z with the N2 bond length."""
    return MoleculeGeometry.from_atoms([("N", (0.0, 0.0, 0.549)), ("N", (0.0, 0.0, -0.549))])


@pytest.fixture
def vib_basis() -> OscillatorBasis:
    """Two modes at ratio 1:3, n_max = 2, benchmark frequency and masses."""
    return OscillatorBasis.from_config(VibrationalConfig(x_step=0.1))


@pytest.fixture
def vib_table(vib_basis) -> PatternFunctionTable:
    """Pattern functions on the two-mode test grid."""
    return build_pattern_table(vib_basis)


@pytest.fixture
def small_rotational_config() -> PipelineConfig:
    """Random trial state at j_max = 4 on a small detector; quick enough for CLI tests."""
    return PipelineConfig(
        rotor={"initial_state": "random_trial", "j_max": 4},
        grids={"n_theta": 20, "n_phi": 4},
        detector={"n_pixels": 12},
        iteration={"max_iterations": 3, "initial_guess": "diagonal"},
    )


@pytest.fixture
def small_vibrational_config() -> PipelineConfig:
    """Two-mode config on a coarse but resolving grid."""
    return PipelineConfig(
        kind="vibrational",
        vibrational={"n_max": 2, "x_step": 0.1},
        iteration={"max_iterations": 3, "initial_guess": "random"},
    )
