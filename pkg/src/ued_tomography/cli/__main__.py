"""CLI entry point: python -m ued_tomography.cli <command>"""

import argparse
import sys
from pathlib import Path

import structlog

from ued_tomography.cli.commands import (
    cmd_invert,
    cmd_lcurve,
    cmd_qt_rot,
    cmd_qt_vib,
    cmd_simulate,
    cmd_validate,
    resolve_output_dir,
)
from ued_tomography.config.pipeline import PipelineConfig, apply_overrides, load_pipeline_config
from ued_tomography.config.settings import environment_help, get_settings
from ued_tomography.errors import UEDTomographyError
from ued_tomography.logging_config import configure_logging

# flag dest -> dotted PipelineConfig field
FLAG_FIELDS = {
    "kind": "kind",
    "j_max": "rotor.j_max",
    "temperature_k": "rotor.temperature_k",
    "fwhm_fs": "pulse.fwhm_fs",
    "peak_intensity_w_cm2": "pulse.peak_intensity_w_cm2",
    "n_theta": "grids.n_theta",
    "n_phi": "grids.n_phi",
    "n_time": "grids.n_time",
    "probe": "detector.probe",
    "probe_energy_kev": "detector.probe_energy_kev",
    "n_pixels": "detector.n_pixels",
    "photon_budget": "noise.photon_budget",
    "noise_seed": "noise.seed",
    "policy": "regularization.policy",
    "lambda_value": "regularization.lambda_value",
    "max_iterations": "iteration.max_iterations",
    "initial_guess": "iteration.initial_guess",
    "seed": "iteration.seed",
    "max_workers": "iteration.max_workers",
}


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, default=None, help="YAML pipeline config; its keys override flags")
    parser.add_argument("--output-dir", type=Path, default=None, help="Artifact directory (default: under output root)")
    parser.add_argument("--kind", choices=["rotational", "vibrational"], default=None)
    parser.add_argument("--j-max", type=int, default=None)
    parser.add_argument("--temperature-k", type=float, default=None)
    parser.add_argument("--fwhm-fs", type=float, default=None)
    parser.add_argument("--peak-intensity-w-cm2", type=float, default=None)
    parser.add_argument("--n-theta", type=int, default=None)
    parser.add_argument("--n-phi", type=int, default=None)
    parser.add_argument("--n-time", type=int, default=None)
    parser.add_argument("--probe", choices=["xray", "electron"], default=None)
    parser.add_argument("--probe-energy-kev", type=float, default=None)
    parser.add_argument("--n-pixels", type=int, default=None)
    parser.add_argument("--photon-budget", type=float, default=None)
    parser.add_argument("--noise-seed", type=int, default=None)
    parser.add_argument("--policy", choices=["fixed", "lcurve"], default=None)
    parser.add_argument("--lambda-value", type=float, default=None)
    parser.add_argument("--max-iterations", type=int, default=None)
    parser.add_argument("--initial-guess", choices=["thermal", "random", "diagonal"], default=None)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--max-workers", type=int, default=None)


def build_config(args: argparse.Namespace) -> PipelineConfig:
    """Flags first, then the config file on top."""
    overrides = {field: getattr(args, dest) for dest, field in FLAG_FIELDS.items()}
    return load_pipeline_config(args.config, base=apply_overrides(PipelineConfig(), overrides))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ued_tomography.cli",
        description="Ultrafast diffraction simulation and quantum state tomography",
        epilog=environment_help(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    subparsers = parser.add_subparsers(dest="command")

    simulate = subparsers.add_parser("simulate", help="Simulate a wavepacket and its diffraction frames or movie")
    _add_config_flags(simulate)

    invert = subparsers.add_parser("invert", help="Tikhonov inversion of diffraction frames")
    invert.add_argument("dataset", type=Path, help="Artifact directory written by simulate")
    _add_config_flags(invert)

    lcurve = subparsers.add_parser("lcurve", help="L-curve and condition-number scan")
    lcurve.add_argument("dataset", type=Path)
    _add_config_flags(lcurve)

    for name, help_text in (("qt-rot", "Rotational tomography"), ("qt-vib", "Vibrational tomography")):
        qt = subparsers.add_parser(name, help=help_text)
        qt.add_argument("measured", type=Path, help="Directory holding the measured distribution or movie")
        qt.add_argument("--reference", type=Path, default=None, help="Directory with rho_true; else experiment mode")
        _add_config_flags(qt)

    validate = subparsers.add_parser("validate", help="Verify digests and schema of an artifact directory")
    validate.add_argument("path", type=Path)
    return parser


def run(args: argparse.Namespace) -> None:
    if args.command == "validate":
        cmd_validate(args.path)
        return
    config = build_config(args)
    output_dir = resolve_output_dir(args.command, config, args.output_dir)
    structlog.contextvars.bind_contextvars(output_dir=str(output_dir))
    if args.command == "simulate":
        cmd_simulate(config, output_dir)
    elif args.command == "invert":
        cmd_invert(config, args.dataset, output_dir)
    elif args.command == "lcurve":
        cmd_lcurve(config, args.dataset, output_dir)
    elif args.command == "qt-rot":
        cmd_qt_rot(config, args.measured, output_dir, args.reference)
    elif args.command == "qt-vib":
        cmd_qt_vib(config, args.measured, output_dir, args.reference)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.command is None:
        parser.print_help()
        return 1

    configure_logging(get_settings(), command=args.command)
    try:
        run(args)
    except UEDTomographyError as e:
        structlog.get_logger().error("command_failed", command=args.command, error=str(e), exit_code=e.exit_code)
        return e.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
