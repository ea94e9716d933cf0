"""Tests for the command-line interface."""

from pathlib import Path

import pytest
import yaml

from ued_tomography.cli import __main__ as cli
from ued_tomography.cli.commands import resolve_output_dir
from ued_tomography.config.pipeline import PipelineConfig
from ued_tomography.errors import DivergenceError, PersistenceError
from ued_tomography.persistence.manifest import load_manifest


@pytest.fixture(autouse=True)
def keep_logging(monkeypatch):
    """Leave the structlog configuration alone so log capture keeps working in other tests."""
    monkeypatch.setattr(cli, "configure_logging", lambda *_, **__: None)


@pytest.fixture
def rotational_yaml(tmp_path, small_rotational_config) -> Path:
    path = tmp_path / "rotational.yaml"
    path.write_text(yaml.safe_dump(small_rotational_config.model_dump(mode="json", exclude={"output_dir"})))
    return path


@pytest.fixture
def simulated(tmp_path, rotational_yaml) -> Path:
    out = tmp_path / "sim"
    assert cli.main(["simulate", "--config", str(rotational_yaml), "--output-dir", str(out)]) == 0
    return out


class TestParser:
    def test_no_command(self, capsys):
        """Without a subcommand the help is printed and the exit code is 1."""
        assert cli.main([]) == 1
        assert "simulate" in capsys.readouterr().out

    def test_help_lists_environment(self, capsys):
        """Every setting read from the environment is named in the top-level help."""
        with pytest.raises(SystemExit) as excinfo:
            cli.main(["--help"])
        assert excinfo.value.code == 0
        out = capsys.readouterr().out
        for name in ("OUTPUT_ROOT", "FORM_FACTOR_TABLE", "LOG_JSON", "LOG_LEVEL"):
            assert f"UED_TOMOGRAPHY_{name}" in out

    def test_flags_then_file(self, tmp_path):
        """Flags set fields; the config file overrides them."""
        config_path = tmp_path / "run.yaml"
        config_path.write_text(yaml.safe_dump({"rotor": {"j_max": 6}}))
        args = cli.build_parser().parse_args(
            ["simulate", "--j-max", "10", "--n-theta", "48", "--config", str(config_path)]
        )
        config = cli.build_config(args)
        assert config.rotor.j_max == 6
        assert config.grids.n_theta == 48

    def test_default_output_dir(self, tmp_path):
        """Without a directory the run lands under the output root, keyed by the config hash."""
        config = PipelineConfig()
        out = resolve_output_dir("simulate", config, None)
        assert out.parent == tmp_path / "runs"
        assert out.name.startswith("simulate-")
        explicit = PipelineConfig(output_dir=tmp_path / "here")
        assert resolve_output_dir("simulate", explicit, None) == tmp_path / "here"
        assert resolve_output_dir("simulate", explicit, tmp_path / "flag") == tmp_path / "flag"


class TestCommands:
    def test_simulate_writes_artifacts(self, simulated):
        manifest = load_manifest(simulated)
        assert manifest.command == "simulate"
        assert {"frames", "distribution", "rho_true_values"} <= set(manifest.arrays)
        assert manifest.arrays["frames"].shape == [41, 144]
        assert {"frames.csv", "pixels.csv"} <= set(manifest.files)

    def test_simulate_deterministic(self, tmp_path, rotational_yaml, simulated):
        """A second run with the same config writes byte-identical arrays."""
        again = tmp_path / "again"
        assert cli.main(["simulate", "--config", str(rotational_yaml), "--output-dir", str(again)]) == 0
        first, second = load_manifest(simulated), load_manifest(again)
        assert {k: r.sha256 for k, r in first.arrays.items()} == {k: r.sha256 for k, r in second.arrays.items()}
        assert first.run_id != second.run_id

    def test_validate(self, simulated, capsys):
        assert cli.main(["validate", str(simulated)]) == 0
        assert "ok (simulate" in capsys.readouterr().out

    def test_validate_corrupted(self, simulated):
        """A modified array file exits with the validation code."""
        path = simulated / "frames.bin"
        raw = bytearray(path.read_bytes())
        raw[-1] ^= 0x01
        path.write_bytes(bytes(raw))
        assert cli.main(["validate", str(simulated)]) == 2

    def test_validate_not_a_directory(self, tmp_path):
        assert cli.main(["validate", str(tmp_path / "missing")]) == 2

    def test_invert(self, tmp_path, rotational_yaml, simulated):
        out = tmp_path / "inv"
        assert cli.main(["invert", str(simulated), "--config", str(rotational_yaml), "--output-dir", str(out)]) == 0
        manifest = load_manifest(out)
        assert manifest.metadata["lambda"] == 10.0
        assert str(simulated / "manifest.json") in manifest.inputs

    def test_qt_rot_with_reference(self, tmp_path, rotational_yaml, simulated, capsys):
        """Tomography on the simulated distribution writes ρ̂ and the convergence table."""
        out = tmp_path / "qt"
        argv = ["qt-rot", str(simulated), "--reference", str(simulated)]
        assert cli.main(argv + ["--config", str(rotational_yaml), "--output-dir", str(out)]) == 0
        manifest = load_manifest(out)
        assert manifest.metadata["experiment_mode"] is False
        assert "convergence.csv" in manifest.files
        assert "Rotational tomography" in capsys.readouterr().out

    def test_qt_vib(self, tmp_path, small_vibrational_config):
        """Vibrational simulate then tomography in experiment mode."""
        config_path = tmp_path / "vib.yaml"
        config_path.write_text(yaml.safe_dump(small_vibrational_config.model_dump(mode="json", exclude={"output_dir"})))
        sim, qt = tmp_path / "vsim", tmp_path / "vqt"
        assert cli.main(["simulate", "--config", str(config_path), "--output-dir", str(sim)]) == 0
        assert cli.main(["qt-vib", str(sim), "--config", str(config_path), "--output-dir", str(qt)]) == 0
        assert load_manifest(qt).metadata["experiment_mode"] is True


class TestExitCodes:
    @pytest.mark.parametrize(
        ("error", "code"),
        [(DivergenceError("diverged", []), 3), (PersistenceError("disk full"), 4)],
    )
    def test_error_mapping(self, monkeypatch, tmp_path, error, code):
        """Package errors become their exit code."""

        def fail(args):
            raise error

        monkeypatch.setattr(cli, "run", fail)
        assert cli.main(["simulate", "--output-dir", str(tmp_path)]) == code
