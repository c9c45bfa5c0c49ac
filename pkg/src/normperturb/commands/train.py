"""``train``: fit the network on the source domain."""

import logging
from dataclasses import dataclass
from pathlib import Path

from src.normperturb.commands.common import (
    checkpoint_path,
    load_benchmark_for,
    output_dir,
    write_provenance,
)
from src.normperturb.models.experiment import ExperimentConfig
from src.normperturb.services.checkpoint import save_checkpoint
from src.normperturb.services.network import ConvNet
from src.normperturb.services.trainer import TrainResult, train, write_metrics_csv
from src.normperturb.utils.seeding import component_rng


logger = logging.getLogger(__name__)

METRICS_NAME = "metrics.csv"


@dataclass
class TrainOutputs:
    checkpoint: Path
    metrics: Path
    result: TrainResult


def train_from_config(config: ExperimentConfig, regenerate: bool = False) -> TrainResult:
    """Initialise from the top-level seed and train on the source split."""
    benchmark = load_benchmark_for(config, regenerate=regenerate)
    net = ConvNet.initialize(config.network_config(), component_rng(config.seed, "init"))
    return train(
        net, benchmark.source_train, config.training_config(), val_set=benchmark.source_val
    )


def cmd_train(config: ExperimentConfig, regenerate: bool = False) -> TrainOutputs:
    """Train, then write the checkpoint, ``metrics.csv`` and ``run.json``.

    Raises:
        TrainingDivergedError: If training produced NaN/Inf values.
    """
    result = train_from_config(config, regenerate=regenerate)
    out = output_dir(config)
    checkpoint = checkpoint_path(config)
    save_checkpoint(result.net, checkpoint, epoch=config.training.epochs, metrics=result.history)
    metrics = write_metrics_csv(result.history, out / METRICS_NAME)
    write_provenance(config, "train", [checkpoint, metrics])
    final = result.final("val")
    if final is not None:
        logger.info(
            "Training complete",
            extra={"val_accuracy": final.accuracy, "checkpoint": str(checkpoint)},
        )
    return TrainOutputs(checkpoint=checkpoint, metrics=metrics, result=result)
