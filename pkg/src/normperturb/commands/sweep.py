"""``sweep``: ablation tables over NP settings."""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from src.normperturb.commands.common import load_benchmark_for, output_dir, write_provenance
from src.normperturb.models.experiment import ExperimentConfig
from src.normperturb.models.reports import SweepRow
from src.normperturb.models.sweep import preset as preset_grid
from src.normperturb.services.sweep import run_sweep, write_rows_csv, write_summary_csv


logger = logging.getLogger(__name__)


@dataclass
class SweepOutputs:
    rows: Path
    summary: Path
    results: list[SweepRow]


def cmd_sweep(
    config: ExperimentConfig,
    jobs: int = 1,
    preset: Optional[str] = None,
    regenerate: bool = False,
) -> SweepOutputs:
    """Run the configured (or preset) grid and write per-seed rows and a summary.

    Grid seeds are offsets from the top-level seed, so ``--seed`` moves the whole sweep.

    Raises:
        KeyError: If ``preset`` names no known grid.
    """
    grid = (preset_grid(preset) if preset else config.diagnostics.sweep).offset_seeds(config.seed)
    benchmark = load_benchmark_for(config, regenerate=regenerate)
    results = run_sweep(
        grid,
        benchmark,
        network=config.network,
        training=config.training_config(),
        gap_target=config.diagnostics.gap_target,
        kernel=config.diagnostics.kernel,
        jobs=jobs,
    )
    name = preset or "sweep"
    out = output_dir(config)
    rows = write_rows_csv(results, out / f"{name}_rows.csv")
    summary = write_summary_csv(results, out / f"{name}_summary.csv")
    write_provenance(config, "sweep", [rows, summary], preset=preset, jobs=jobs)
    logger.info("Sweep complete", extra={"rows": len(results), "table": str(rows)})
    return SweepOutputs(rows=rows, summary=summary, results=results)
