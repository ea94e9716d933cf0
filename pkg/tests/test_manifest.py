"""Tests for run manifests and artifact verification."""

import json

import numpy as np
import pytest

from ued_tomography.config.pipeline import PipelineConfig
from ued_tomography.errors import PersistenceError, ValidationError
from ued_tomography.persistence.arrays import write_array
from ued_tomography.persistence.manifest import (
    MANIFEST_NAME,
    compute_file_hash,
    config_hash,
    load_manifest,
    new_manifest,
    verify_manifest,
    write_manifest,
)


@pytest.fixture
def config() -> PipelineConfig:
    return PipelineConfig(rotor={"temperature_k": 10.0})


class TestHashes:
    def test_file_hash(self, tmp_path):
        """SHA-256 of a small file matches the known digest."""
        path = tmp_path / "abc.txt"
        path.write_bytes(b"abc")
        assert compute_file_hash(path) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"

    def test_missing_file(self, tmp_path):
        with pytest.raises(PersistenceError, match="cannot read"):
            compute_file_hash(tmp_path / "absent.bin")

    def test_config_hash_stable(self, config):
        """Equal configs hash equally; any change shows up."""
        assert config_hash(config) == config_hash(PipelineConfig(rotor={"temperature_k": 10.0}))
        assert config_hash(config) != config_hash(PipelineConfig())


class TestManifest:
    def test_new_manifest(self, config):
        manifest = new_manifest("simulate", config, {"input/manifest.json": "0" * 64})
        assert manifest.command == "simulate"
        assert manifest.config_hash == config_hash(config)
        assert manifest.config["rotor"]["temperature_k"] == 10.0
        assert {"numpy", "scipy", "pydantic", "ued_tomography"} <= set(manifest.versions)
        assert manifest.inputs == {"input/manifest.json": "0" * 64}

    def test_roundtrip(self, tmp_path, config):
        manifest = new_manifest("simulate", config)
        write_array(tmp_path, manifest, "x", np.arange(3.0))
        write_manifest(tmp_path, manifest)
        loaded = load_manifest(tmp_path)
        assert loaded.run_id == manifest.run_id
        assert loaded.arrays["x"].shape == [3]
        assert loaded.pipeline_config() == config

    def test_missing_manifest(self, tmp_path):
        with pytest.raises(PersistenceError, match="cannot read"):
            load_manifest(tmp_path)

    def test_schema_error_names_field(self, tmp_path, config):
        """A manifest missing a required field is rejected with its name."""
        data = json.loads(new_manifest("simulate", config).model_dump_json())
        del data["command"]
        (tmp_path / MANIFEST_NAME).write_text(json.dumps(data))
        with pytest.raises(ValidationError, match="command"):
            load_manifest(tmp_path)

    def test_config_drift(self, config):
        """An embedded config the current schema rejects is reported."""
        manifest = new_manifest("simulate", config)
        manifest.config["rotor"]["temperature_k"] = -5.0
        with pytest.raises(ValidationError, match="config schema drift"):
            manifest.pipeline_config()


class TestVerify:
    def test_clean_directory(self, tmp_path, config):
        manifest = new_manifest("simulate", config)
        write_array(tmp_path, manifest, "x", np.arange(4.0))
        write_manifest(tmp_path, manifest)
        assert verify_manifest(tmp_path).run_id == manifest.run_id

    def test_corrupted_file(self, tmp_path, config):
        """A changed byte is a digest mismatch."""
        manifest = new_manifest("simulate", config)
        write_array(tmp_path, manifest, "x", np.arange(4.0))
        write_manifest(tmp_path, manifest)
        raw = bytearray((tmp_path / "x.bin").read_bytes())
        raw[0] ^= 0xFF
        (tmp_path / "x.bin").write_bytes(bytes(raw))
        with pytest.raises(ValidationError, match="x.bin: digest mismatch"):
            verify_manifest(tmp_path)

    def test_missing_file(self, tmp_path, config):
        manifest = new_manifest("simulate", config)
        write_array(tmp_path, manifest, "x", np.arange(4.0))
        write_manifest(tmp_path, manifest)
        (tmp_path / "x.bin").unlink()
        with pytest.raises(ValidationError, match="x.bin: missing"):
            verify_manifest(tmp_path)
