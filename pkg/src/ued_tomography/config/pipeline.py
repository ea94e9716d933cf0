"""Pipeline configuration with sensible defaults.

Every run (simulation, inversion, tomography) is described by a single
``PipelineConfig``.  All parameters can be overridden from a YAML file such
as ``config/n2_benchmark.yaml``; keys missing from the file keep their
defaults.  Physical units are part of the field names.
"""

from __future__ import annotations

from pathlib import Path
from typing import Literal

import structlog
import yaml
from pydantic import BaseModel, Field, field_validator, model_validator

from ued_tomography.errors import ValidationError

DEFAULT_CONSTRAINT_ORDER = ["hermitize", "partial_trace", "positivity", "m_symmetry", "trace"]


class AtomConfig(BaseModel):
    """One atom of the molecule, position in the molecular frame."""

    element: str
    position_angstrom: tuple[float, float, float]


class MoleculeConfig(BaseModel):
    """Molecular geometry; the molecular axis is the frame z axis."""

    name: str = "N2"
    atoms: list[AtomConfig] = [
        AtomConfig(element="N", position_angstrom=(0.0, 0.0, 0.549)),
        AtomConfig(element="N", position_angstrom=(0.0, 0.0, -0.549)),
    ]

    @field_validator("atoms")
    @classmethod
    def require_atoms(cls, atoms: list[AtomConfig]) -> list[AtomConfig]:
        if not atoms:
            raise ValueError("molecule needs at least one atom")
        return atoms


class RotorConfig(BaseModel):
    """Linear rigid rotor and its thermal ensemble."""

    rotational_constant_cm: float = Field(default=1.99, gt=0.0)
    centrifugal_distortion_cm: float = 0.0
    alpha_parallel_a3: float = 2.38
    alpha_perp_a3: float = 1.45
    spin_weight_even: float = Field(default=6.0, ge=0.0)
    spin_weight_odd: float = Field(default=3.0, ge=0.0)
    temperature_k: float = Field(default=30.0, ge=0.0)
    j_max: int = Field(default=8, ge=0)
    thermal_tail_tolerance: float = 1e-6
    top_shell_tolerance: float = 1e-4
    initial_state: Literal["thermal_aligned", "random_trial"] = "thermal_aligned"


class PulseConfig(BaseModel):
    """Gaussian alignment pulse polarized along the lab z axis."""

    fwhm_fs: float = Field(default=50.0, gt=0.0)
    peak_intensity_w_cm2: float = Field(default=1e13, ge=0.0)
    center_fs: float | None = None
    rtol: float = 1e-10
    atol: float = 1e-12
    norm_tolerance: float = 1e-6
    max_workers: int = 1


class GridConfig(BaseModel):
    """Orientation quadrature and time sampling."""

    n_theta: int = Field(default=36, ge=1)
    n_phi: int = Field(default=8, ge=1)
    quadrature: Literal["gauss", "riemann"] = "gauss"
    n_time: int | None = None
    start_time_ps: float | None = None
    sampling_guard: Literal["raise", "warn"] = "raise"


class DetectorConfig(BaseModel):
    """Square detector mapped onto scattering angles."""

    probe: Literal["xray", "electron"] = "xray"
    probe_energy_kev: float = Field(default=20.0, gt=0.0)
    n_pixels: int = Field(default=32, ge=1)
    s_max_inv_angstrom: float = Field(default=4.5, gt=0.0)
    beam_stop_radius_inv_angstrom: float = 0.0
    kernel_memory_cap_mb: float = 2048.0
    row_block_size: int = 4096
    max_workers: int = 1


class NoiseConfig(BaseModel):
    """Counting noise on simulated frames; no budget means noiseless."""

    photon_budget: float | None = None
    seed: int = 0


class RegularizationConfig(BaseModel):
    """Tikhonov parameter policy and L-curve scan."""

    policy: Literal["fixed", "lcurve"] = "fixed"
    lambda_value: float = Field(default=10.0, ge=0.0)
    lambda_min: float = 1e-2
    lambda_max: float = 1e8
    n_lambda: int = Field(default=41, ge=10)
    condition_trials: int = 5
    condition_noise: float = 0.01
    cond_max: float = 10.0
    seed: int = 0


class IterationConfig(BaseModel):
    """Iterative tomography loop: stopping rules and constraint parameters."""

    max_iterations: int = 50
    plateau_tolerance: float = 1e-6
    plateau_window: int = 5
    divergence_factor: float = 10.0
    error_floor: float = 1e-12
    hio_beta: float = Field(default=0.9, gt=0.0, le=1.0)
    psd_tolerance: float = 1e-8
    hio_max_steps: int = 50
    partial_trace_tolerance: float = 1e-3
    use_partial_traces: bool = True
    m_symmetry: bool = True
    constraint_order: list[str] = list(DEFAULT_CONSTRAINT_ORDER)
    initial_guess: Literal["thermal", "random", "diagonal"] = "thermal"
    seed: int = 0
    max_workers: int = 1

    @field_validator("constraint_order")
    @classmethod
    def known_steps(cls, order: list[str]) -> list[str]:
        unknown = set(order) - set(DEFAULT_CONSTRAINT_ORDER)
        if unknown:
            raise ValueError(f"unknown constraint steps: {sorted(unknown)}")
        return order


class MomentumConstraintConfig(BaseModel):
    """Measured expectation of a product of mode momenta, e.g. powers [2, 1] for p₁²p₂."""

    powers: list[int]
    measured_value: float


class VibrationalConfig(BaseModel):
    """Separable harmonic modes sharing a base frequency."""

    mode_ratios: list[int] = [1, 3]
    base_frequency_cm: float = Field(default=1209.8, gt=0.0)
    reduced_masses_amu: list[float] = [12.0, 12.0]
    n_max: int = Field(default=2, ge=0)
    x_step: float = 0.05
    x_margin: float = 5.0
    n_time: int | None = None
    diagonal_constraint: bool = False
    snapshot_time_fs: float = 1.8
    state_seed: int = 0
    state_rank: int | None = Field(default=1, ge=1)
    momentum_constraints: list[MomentumConstraintConfig] = []

    @model_validator(mode="after")
    def check_modes(self) -> "VibrationalConfig":
        if len(self.mode_ratios) != len(self.reduced_masses_amu):
            raise ValueError("mode_ratios and reduced_masses_amu must have equal length")
        if any(r <= 0 for r in self.mode_ratios):
            raise ValueError("mode ratios must be positive integers")
        return self


class PipelineConfig(BaseModel):
    """Top-level configuration combining all sub-configs."""

    kind: Literal["rotational", "vibrational"] = "rotational"
    molecule: MoleculeConfig = MoleculeConfig()
    rotor: RotorConfig = RotorConfig()
    pulse: PulseConfig = PulseConfig()
    grids: GridConfig = GridConfig()
    detector: DetectorConfig = DetectorConfig()
    noise: NoiseConfig = NoiseConfig()
    regularization: RegularizationConfig = RegularizationConfig()
    iteration: IterationConfig = IterationConfig()
    vibrational: VibrationalConfig = VibrationalConfig()
    output_dir: Path | None = None

    @model_validator(mode="after")
    def warn_if_undersampled(self) -> "PipelineConfig":
        """Log a warning if the time grid is below the Nyquist count for j_max."""
        j_max = self.rotor.j_max
        required = 2 * j_max * (j_max + 1) + 1
        if self.grids.n_time is not None and self.grids.n_time < required:
            structlog.get_logger().warning(
                "time_grid_below_nyquist",
                n_time=self.grids.n_time,
                required=required,
            )
        if self.grids.quadrature == "gauss" and self.grids.n_theta < 4 * j_max:
            structlog.get_logger().warning(
                "theta_grid_below_exactness",
                n_theta=self.grids.n_theta,
                required=4 * j_max,
            )
        return self


def _deep_merge(base: dict, override: dict) -> dict:
    merged = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def load_pipeline_config(path: Path | None, base: PipelineConfig | None = None) -> PipelineConfig:
    """Load pipeline configuration from a YAML file.

    Keys present in the file override ``base`` (defaults when omitted); a
    missing file or ``None`` returns ``base`` unchanged.

    Raises:
        ValidationError: If the file content does not match the schema; the
            message carries the offending field path.
    """
    base = PipelineConfig() if base is None else base
    if path is None or not path.exists():
        return base

    with open(path) as f:
        data = yaml.safe_load(f) or {}

    try:
        return PipelineConfig(**_deep_merge(base.model_dump(), data))
    except ValueError as e:
        raise ValidationError(f"Invalid pipeline config {path}: {e}") from e


def apply_overrides(config: PipelineConfig, overrides: dict[str, object]) -> PipelineConfig:
    """Return a copy of ``config`` with dotted-path overrides applied.

    Keys look like ``"rotor.temperature_k"``.  ``None`` values are skipped so
    unset CLI flags leave the config untouched.
    """
    data = config.model_dump()
    for dotted, value in overrides.items():
        if value is None:
            continue
        *parents, leaf = dotted.split(".")
        target = data
        for key in parents:
            target = target[key]
        target[leaf] = value
    try:
        return PipelineConfig(**data)
    except ValueError as e:
        raise ValidationError(f"Invalid override: {e}") from e
