"""``eval``: accuracy of a checkpoint on the source and every target domain."""

import csv
import json
import logging
from pathlib import Path
from typing import Optional

from src.normperturb.commands.common import (
    checkpoint_path,
    load_benchmark_for,
    output_dir,
    write_provenance,
)
from src.normperturb.models.experiment import ExperimentConfig
from src.normperturb.services.checkpoint import load_checkpoint
from src.normperturb.services.trainer import evaluate


logger = logging.getLogger(__name__)

ACCURACY_CSV = "accuracy.csv"
ACCURACY_JSON = "accuracy.json"


def accuracy_table(
    config: ExperimentConfig, checkpoint: Optional[str | Path] = None, regenerate: bool = False
) -> dict[str, float]:
    """Domain name → accuracy, source first.

    Raises:
        FileNotFoundError: If the checkpoint is missing.
    """
    net, _ = load_checkpoint(checkpoint_path(config, checkpoint))
    benchmark = load_benchmark_for(config, regenerate=regenerate)
    return {name: evaluate(net, data) for name, data in benchmark.evaluation_sets().items()}


def cmd_eval(
    config: ExperimentConfig, checkpoint: Optional[str | Path] = None, regenerate: bool = False
) -> Path:
    """Write ``accuracy.csv`` (domain, accuracy) and its JSON twin.

    Returns:
        Path of the CSV table.
    """
    table = accuracy_table(config, checkpoint, regenerate)
    out = output_dir(config)
    csv_path = out / ACCURACY_CSV
    with csv_path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["domain", "accuracy"])
        for domain, accuracy in table.items():
            writer.writerow([domain, f"{accuracy:.6f}"])
    json_path = out / ACCURACY_JSON
    json_path.write_text(json.dumps(table, indent=2), encoding="utf-8")
    write_provenance(config, "eval", [csv_path, json_path])
    logger.info("Evaluation complete", extra={"accuracy": table})
    return csv_path
