"""``gen``: generate (or load) the benchmark dataset."""

import logging
from pathlib import Path

from src.normperturb.commands.common import load_benchmark_for, write_provenance
from src.normperturb.models.experiment import ExperimentConfig


logger = logging.getLogger(__name__)


def cmd_gen(config: ExperimentConfig, regenerate: bool = False) -> Path:
    """Make sure the benchmark for ``config`` exists on disk.

    Returns:
        The dataset directory.
    """
    benchmark = load_benchmark_for(config, regenerate=regenerate)
    directory = config.dataset_dir
    write_provenance(
        config,
        "gen",
        [directory],
        splits={name: len(data) for name, data in benchmark.evaluation_sets().items()},
    )
    logger.info(f"Dataset ready in {directory}", extra={"train": len(benchmark.source_train)})
    return directory
