"""``diagnose``: domain-gap, sensitivity and subset-transfer reports for a checkpoint."""

import csv
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
from src.normperturb.models.reports import GapReport
from src.normperturb.services.checkpoint import load_checkpoint
from src.normperturb.services.diagnostics import (
    channel_subset_transfer,
    dump_stage_stats,
    extract_stage_stats,
    sensitivity_ranking,
    stage_gap,
    write_report,
)


logger = logging.getLogger(__name__)

REPORTS_DIR = "diagnostics"


def _write_gap_table(reports: list[GapReport], path: Path) -> Path:
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["source", "target", "standardized", "stage", "mmd", "accumulated"])
        for report in reports:
            for gap in report.per_stage:
                writer.writerow(
                    [
                        report.dataset_pair[0],
                        report.dataset_pair[1],
                        report.standardized,
                        gap.stage,
                        f"{gap.mmd:.6e}",
                        f"{gap.accumulated:.6e}",
                    ]
                )
    return path


def cmd_diagnose(
    config: ExperimentConfig, checkpoint: Optional[str | Path] = None, regenerate: bool = False
) -> list[Path]:
    """Write gap and MMD reports against every target, the sensitivity ranking and two
    subset-transfer reports (top fraction most-sensitive, rest least-sensitive).

    Raises:
        FileNotFoundError: If the checkpoint is missing.
        ValueError: If the configured sensitivity pair is not a benchmark target.
    """
    ckpt = checkpoint_path(config, checkpoint)
    net, _ = load_checkpoint(ckpt)
    benchmark = load_benchmark_for(config, regenerate=regenerate)
    diag = config.diagnostics
    if diag.sensitivity_pair not in benchmark.targets:
        raise ValueError(
            f"sensitivity pair {diag.sensitivity_pair!r} not in {sorted(benchmark.targets)}"
        )
    out = output_dir(config) / REPORTS_DIR
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    gaps: list[GapReport] = []
    for name, target in benchmark.targets.items():
        for standardize in sorted({False, diag.standardize}):
            report = stage_gap(
                net,
                benchmark.source_val,
                target,
                kernel=diag.kernel,
                standardize=standardize,
                model_id=str(ckpt),
                stages=diag.stages,
            )
            suffix = "_z" if standardize else ""
            written.append(write_report(report, out / f"gap_source_{name}{suffix}.json"))
            written.append(
                write_report(report.to_mmd_report(), out / f"mmd_source_{name}{suffix}.json")
            )
            gaps.append(report)
    written.append(_write_gap_table(gaps, out / "gap.csv"))

    pair = benchmark.targets[diag.sensitivity_pair]
    sensitivity = sensitivity_ranking(
        net, (benchmark.source_val, pair), diag.sensitivity_stage, top_k=diag.top_k
    )
    written.append(write_report(sensitivity, out / "sensitivity.json"))

    fraction = diag.transfer_fraction
    for direction, share in (("most-sensitive", fraction), ("least-sensitive", 1.0 - fraction)):
        transfer = channel_subset_transfer(
            net,
            benchmark.source_val,
            pair,
            diag.sensitivity_stage,
            share,
            direction,  # type: ignore[arg-type]
            kernel=diag.kernel,
        )
        written.append(write_report(transfer, out / f"transfer_{direction}.json"))

    if diag.dump_stats:
        stats = {
            name: extract_stage_stats(net, data, diag.stages)
            for name, data in benchmark.evaluation_sets().items()
        }
        written.extend(dump_stage_stats(stats, out / "stats"))

    write_provenance(config, "diagnose", written, checkpoint=str(ckpt))
    logger.info(f"Diagnostics written to {out}", extra={"files": len(written)})
    return written
