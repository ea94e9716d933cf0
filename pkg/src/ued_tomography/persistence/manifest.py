"""Run manifests: what produced an artifact directory and how to check it.

Every command writes ``manifest.json`` next to its outputs.  The manifest
records the full configuration and its hash, package versions, digests of
the inputs it read and of every file it wrote.  Array files and CSVs are
byte-deterministic for a fixed seed; the manifest itself carries a
timestamp and run id and is not digested.
"""

from __future__ import annotations

import hashlib
import json
import platform
import uuid
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

import numpy as np
import pydantic
import scipy
import structlog
from pydantic import BaseModel, Field

from ued_tomography import __version__
from ued_tomography.config.pipeline import PipelineConfig
from ued_tomography.errors import PersistenceError, ValidationError

logger = structlog.get_logger()

MANIFEST_NAME = "manifest.json"
FORMAT_VERSION = 1


class ArrayRecord(BaseModel):
    """One little-endian float64 file; complex arrays are stored as interleaved (re, im)."""

    file: str
    shape: list[int]
    complex: bool = False
    sha256: str


class RunManifest(BaseModel):
    format_version: int = FORMAT_VERSION
    command: str
    run_id: str
    created_at: datetime
    config_hash: str
    config: dict[str, Any]
    versions: dict[str, str]
    inputs: dict[str, str] = Field(default_factory=dict)
    arrays: dict[str, ArrayRecord] = Field(default_factory=dict)
    files: dict[str, str] = Field(default_factory=dict)
    metadata: dict[str, Any] = Field(default_factory=dict)

    def pipeline_config(self) -> PipelineConfig:
        """Re-validate the embedded configuration against the current schema."""
        try:
            return PipelineConfig(**self.config)
        except pydantic.ValidationError as e:
            raise ValidationError(f"config schema drift: {_field_errors(e)}") from e


def compute_file_hash(file_path: Path) -> str:
    """SHA-256 of a file, read in 64KB chunks."""
    sha256 = hashlib.sha256()
    try:
        with open(file_path, "rb") as f:
            while chunk := f.read(65536):
                sha256.update(chunk)
    except OSError as e:
        raise PersistenceError(f"cannot read {file_path}: {e}") from e
    return sha256.hexdigest()


def config_hash(config: PipelineConfig) -> str:
    canonical = json.dumps(config.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def package_versions() -> dict[str, str]:
    return {
        "ued_tomography": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "pydantic": pydantic.__version__,
        "python": platform.python_version(),
    }


def new_manifest(command: str, config: PipelineConfig, inputs: dict[str, str] | None = None) -> RunManifest:
    return RunManifest(
        command=command,
        run_id=str(uuid.uuid4())[:12],
        created_at=datetime.now(timezone.utc),
        config_hash=config_hash(config),
        config=config.model_dump(mode="json"),
        versions=package_versions(),
        inputs=dict(inputs or {}),
    )


def _field_errors(error: pydantic.ValidationError) -> str:
    return "; ".join(".".join(str(part) for part in item["loc"]) + f": {item['msg']}" for item in error.errors())


def write_manifest(directory: Path, manifest: RunManifest) -> Path:
    path = directory / MANIFEST_NAME
    try:
        directory.mkdir(parents=True, exist_ok=True)
        path.write_text(manifest.model_dump_json(indent=2), encoding="utf-8")
    except OSError as e:
        raise PersistenceError(f"cannot write {path}: {e}") from e
    logger.info("manifest_written", path=str(path), arrays=len(manifest.arrays), files=len(manifest.files))
    return path


def load_manifest(directory: Path) -> RunManifest:
    """Read and schema-check ``manifest.json``.

    Raises:
        PersistenceError: If the file cannot be read.
        ValidationError: If it does not match the manifest schema; the
            message names the offending field path.
    """
    path = directory / MANIFEST_NAME
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise PersistenceError(f"cannot read {path}: {e}") from e
    try:
        return RunManifest.model_validate_json(text)
    except pydantic.ValidationError as e:
        raise ValidationError(f"invalid manifest {path}: {_field_errors(e)}") from e


def verify_manifest(directory: Path, manifest: RunManifest | None = None) -> RunManifest:
    """Check every recorded digest and the embedded config.

    Raises:
        ValidationError: Listing each file whose digest differs or is missing.
    """
    manifest = load_manifest(directory) if manifest is None else manifest
    recorded = {record.file: record.sha256 for record in manifest.arrays.values()} | manifest.files
    problems = []
    for name, digest in sorted(recorded.items()):
        path = directory / name
        if not path.exists():
            problems.append(f"{name}: missing")
        elif compute_file_hash(path) != digest:
            problems.append(f"{name}: digest mismatch")
    if problems:
        raise ValidationError(f"artifact check failed in {directory}: " + ", ".join(problems))
    manifest.pipeline_config()
    logger.info("manifest_verified", path=str(directory), files=len(recorded))
    return manifest
