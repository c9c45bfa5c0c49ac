"""Checkpoints: ``manifest.json`` plus one ``.tsr`` blob per parameter."""

from __future__ import annotations

import json
import logging
from pathlib import Path

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from src.normperturb.models.network import EpochMetrics, NetworkConfig
from src.normperturb.services.network import ConvNet
from src.normperturb.tensor.serialization import TSR_SUFFIX, load_tsr, save_tsr
from src.normperturb.tensor.tensor import Tensor


logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"
PARAMS_DIR = "params"


class CheckpointManifest(BaseModel):
    """Everything needed to rebuild a trained network besides its weights."""

    model_config = ConfigDict(extra="forbid")

    network: NetworkConfig
    epoch: int = Field(ge=0)
    dtype: str
    parameters: list[str]
    metrics: list[EpochMetrics] = Field(default_factory=list)


def save_checkpoint(
    net: ConvNet,
    directory: str | Path,
    epoch: int,
    metrics: list[EpochMetrics] | None = None,
) -> Path:
    """Write ``net`` under ``directory`` and return the manifest path."""
    root = Path(directory)
    (root / PARAMS_DIR).mkdir(parents=True, exist_ok=True)
    names = []
    for name, data in net.state_dict().items():
        save_tsr(root / PARAMS_DIR / f"{name}{TSR_SUFFIX}", data)
        names.append(name)
    manifest = CheckpointManifest(
        network=net.config,
        epoch=epoch,
        dtype=str(net.dtype),
        parameters=names,
        metrics=metrics or [],
    )
    path = root / MANIFEST_NAME
    path.write_text(manifest.model_dump_json(indent=2), encoding="utf-8")
    logger.info(f"Checkpoint saved to {root}", extra={"epoch": epoch, "parameters": len(names)})
    return path


def load_checkpoint(directory: str | Path) -> tuple[ConvNet, CheckpointManifest]:
    """Rebuild the network stored under ``directory``.

    Raises:
        FileNotFoundError: If the manifest or a parameter blob is missing.
        pydantic.ValidationError: If the manifest is malformed.
        ValueError: If blobs do not match the stored layout.
    """
    root = Path(directory)
    manifest_path = root / MANIFEST_NAME
    if not manifest_path.is_file():
        raise FileNotFoundError(f"no checkpoint manifest at {manifest_path}")
    manifest = CheckpointManifest.model_validate(
        json.loads(manifest_path.read_text(encoding="utf-8"))
    )
    params: dict[str, Tensor] = {}
    for name in manifest.parameters:
        blob = root / PARAMS_DIR / f"{name}{TSR_SUFFIX}"
        if not blob.is_file():
            raise FileNotFoundError(f"checkpoint parameter missing: {blob}")
        params[name] = Tensor(load_tsr(blob), requires_grad=True, dtype=np.dtype(manifest.dtype))
    return ConvNet(manifest.network, params), manifest
