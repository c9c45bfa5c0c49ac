"""Helpers shared by every command: output layout, provenance, benchmark access."""

import hashlib
import json
import logging
import platform
from datetime import datetime, timezone
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path
from typing import Any, Optional

from pydantic import BaseModel, ConfigDict, Field

from src.normperturb.models.dataset import Benchmark
from src.normperturb.models.experiment import ExperimentConfig
from src.normperturb.services.datasets import load_or_generate


logger = logging.getLogger(__name__)

PROVENANCE_NAME = "run.json"
CHECKPOINT_DIR = "checkpoint"

_TRACKED_PACKAGES = ("normperturb", "numpy", "scipy", "pydantic", "Pillow", "matplotlib")


class Provenance(BaseModel):
    """What produced an output directory."""

    model_config = ConfigDict(frozen=True)

    command: str
    config_sha256: str
    seed: int
    dataset_seed: int
    versions: dict[str, str]
    created_at: str
    outputs: list[str] = Field(default_factory=list)


def config_digest(config: ExperimentConfig) -> str:
    canonical = json.dumps(config.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def package_versions() -> dict[str, str]:
    versions = {"python": platform.python_version()}
    for package in _TRACKED_PACKAGES:
        try:
            versions[package] = version(package)
        except PackageNotFoundError:
            versions[package] = "unknown"
    return versions


def output_dir(config: ExperimentConfig) -> Path:
    path = Path(config.output_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def checkpoint_path(config: ExperimentConfig, override: Optional[str | Path] = None) -> Path:
    return Path(override) if override is not None else Path(config.output_dir) / CHECKPOINT_DIR


def write_provenance(
    config: ExperimentConfig, command: str, outputs: list[Path], **extra: Any
) -> Path:
    """Write ``run.json`` next to the command's outputs.

    The timestamp is the only field that changes between identical runs.
    """
    record = Provenance(
        command=command,
        config_sha256=config_digest(config),
        seed=config.seed,
        dataset_seed=config.dataset_seed,
        versions=package_versions(),
        created_at=datetime.now(timezone.utc).isoformat(),
        outputs=[str(p) for p in outputs],
    )
    data = record.model_dump()
    data.update(extra)
    path = output_dir(config) / PROVENANCE_NAME
    path.write_text(json.dumps(data, indent=2, sort_keys=True), encoding="utf-8")
    return path


def load_benchmark_for(config: ExperimentConfig, regenerate: bool = False) -> Benchmark:
    """Stored benchmark for ``config``, generated on first use or when asked to."""
    return load_or_generate(
        config.dataset_dir,
        seed=config.dataset_seed,
        train_size=config.dataset.train_size,
        val_size=config.dataset.val_size,
        image_size=config.dataset.image_size,
        regenerate=regenerate or config.dataset.regenerate,
    )
