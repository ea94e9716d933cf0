"""Run the desk-scale benchmark scenarios and print a results table.

Loads the shipped configs from ``config/``, optionally shrinks them for a
quick pass, and hands them to the evaluation harness.

Usage:
    uv run python scripts/run_benchmarks.py [--only rotational random vibrational] [--quick]

Exits non-zero when any scenario misses its threshold.
"""

import argparse
import sys
from pathlib import Path

from ued_tomography.config.pipeline import PipelineConfig, apply_overrides, load_pipeline_config
from ued_tomography.config.settings import get_settings
from ued_tomography.evaluation.harness import run_benchmarks
from ued_tomography.logging_config import configure_logging

CONFIG_DIR = Path(__file__).resolve().parents[1] / "config"

# Smaller grids for a smoke run; thresholds are not expected to hold
QUICK_OVERRIDES = {
    "iteration.max_iterations": 5,
    "regularization.n_lambda": 15,
    "regularization.condition_trials": 2,
    "detector.n_pixels": 16,
}


def load(name: str, quick: bool) -> PipelineConfig:
    config = load_pipeline_config(CONFIG_DIR / name)
    return apply_overrides(config, QUICK_OVERRIDES) if quick else config


def main() -> int:
    parser = argparse.ArgumentParser(description="Run benchmark scenarios")
    parser.add_argument(
        "--only",
        nargs="+",
        choices=["rotational", "random", "vibrational"],
        default=["rotational", "random", "vibrational"],
    )
    parser.add_argument("--quick", action="store_true", help="Shrink grids and iteration counts")
    args = parser.parse_args()

    configure_logging(get_settings(), command="benchmarks", quick=args.quick)

    results = run_benchmarks(
        rotational=load("n2_benchmark.yaml", args.quick) if "rotational" in args.only else None,
        random_trial=load("random_state.yaml", args.quick) if "random" in args.only else None,
        vibrational=load("vibrational_2d.yaml", args.quick) if "vibrational" in args.only else None,
    )
    return 0 if all(r.passed for r in results) else 1


if __name__ == "__main__":
    sys.exit(main())
