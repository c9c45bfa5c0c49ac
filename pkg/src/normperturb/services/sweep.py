"""Ablation sweeps: train every grid cell under every seed and tabulate results."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from multiprocessing import Pool
from pathlib import Path
from typing import Optional

import numpy as np
from pydantic import ValidationError

from src.normperturb.models.dataset import Benchmark
from src.normperturb.models.network import NetworkConfig, TrainConfig
from src.normperturb.models.reports import KernelSpec, SweepRow
from src.normperturb.models.sweep import SkippedCell, SweepCell, SweepGrid
from src.normperturb.services.diagnostics import stage_gap
from src.normperturb.services.network import ConvNet
from src.normperturb.services.trainer import evaluate, train
from src.normperturb.utils.seeding import component_rng


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SweepTask:
    cell: SweepCell
    network: NetworkConfig
    training: TrainConfig
    seed: int
    gap_target: str
    kernel: KernelSpec


# benchmark shared with pool workers through the initializer
_WORKER_BENCHMARK: Optional[Benchmark] = None


def _init_worker(benchmark: Benchmark) -> None:
    global _WORKER_BENCHMARK
    _WORKER_BENCHMARK = benchmark


def run_cell(task: SweepTask, benchmark: Benchmark) -> SweepRow:
    """Train one cell under one seed and evaluate it on every domain."""
    training = task.training.model_copy(update={"seed": task.seed, "augment": task.cell.augment})
    net = ConvNet.initialize(task.network, component_rng(task.seed, "init"))
    logger.info(f"Sweep cell started: {task.cell.label}", extra={"seed": task.seed})
    result = train(net, benchmark.source_train, training)
    model = result.net
    source_accuracy = evaluate(model, benchmark.source_val)
    target_accuracy = {name: evaluate(model, data) for name, data in benchmark.targets.items()}
    final_stage = len(task.network.stages)
    gap = stage_gap(
        model,
        benchmark.source_val,
        benchmark.targets[task.gap_target],
        kernel=task.kernel,
        model_id=f"{task.cell.label}#{task.seed}",
        stages=[final_stage],
    )
    row = SweepRow(
        label=task.cell.label,
        seed=task.seed,
        source_accuracy=source_accuracy,
        target_accuracy=target_accuracy,
        final_stage_mmd=gap.per_stage[-1].mmd,
    )
    logger.info(
        f"Sweep cell finished: {task.cell.label}",
        extra={
            "seed": task.seed,
            "source_accuracy": source_accuracy,
            "mean_target_accuracy": row.mean_target_accuracy,
            "target_accuracy": target_accuracy,
            "final_stage_mmd": row.final_stage_mmd,
        },
    )
    return row


def _run_in_worker(task: SweepTask) -> SweepRow:
    assert _WORKER_BENCHMARK is not None
    return run_cell(task, _WORKER_BENCHMARK)


def plan_sweep(
    grid: SweepGrid,
    network: NetworkConfig,
    training: TrainConfig,
    gap_target: str,
    kernel: KernelSpec,
) -> tuple[list[SweepTask], list[SkippedCell]]:
    """Expand the grid into tasks, skipping cells the network cannot host."""
    cells, skipped = grid.expand()
    tasks: list[SweepTask] = []
    for cell in cells:
        try:
            cell_network = network.model_copy(update={"np_sites": cell.sites})
            cell_network = NetworkConfig.model_validate(cell_network.model_dump())
        except ValidationError as exc:
            reason = "; ".join(str(err["msg"]) for err in exc.errors())
            skipped.append(SkippedCell(label=cell.label, reason=reason))
            continue
        tasks.extend(
            SweepTask(cell, cell_network, training, seed, gap_target, kernel)
            for seed in grid.seeds
        )
    for cell in skipped:
        logger.warning(f"Skipping sweep cell {cell.label}: {cell.reason}")
    return tasks, skipped


def run_sweep(
    grid: SweepGrid,
    benchmark: Benchmark,
    network: NetworkConfig,
    training: TrainConfig,
    gap_target: str = "fog",
    kernel: Optional[KernelSpec] = None,
    jobs: int = 1,
) -> list[SweepRow]:
    """Train every valid cell under every seed of ``grid``.

    Rows come back ordered by cell then seed, whatever the worker count.

    Raises:
        ValueError: If ``gap_target`` is not a benchmark target or ``jobs < 1``.
    """
    if gap_target not in benchmark.targets:
        raise ValueError(f"gap target {gap_target!r} not in {sorted(benchmark.targets)}")
    if jobs < 1:
        raise ValueError(f"jobs must be >= 1, got {jobs}")
    tasks, _ = plan_sweep(grid, network, training, gap_target, kernel or KernelSpec())
    logger.info("Sweep planned", extra={"tasks": len(tasks), "jobs": jobs})
    if jobs == 1 or len(tasks) <= 1:
        return [run_cell(task, benchmark) for task in tasks]
    with Pool(jobs, initializer=_init_worker, initargs=(benchmark,)) as pool:
        return pool.map(_run_in_worker, tasks, chunksize=1)


def _target_names(rows: list[SweepRow]) -> list[str]:
    names: list[str] = []
    for row in rows:
        names.extend(name for name in row.target_accuracy if name not in names)
    return names


def write_rows_csv(rows: list[SweepRow], path: str | Path) -> Path:
    """One line per (cell, seed)."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    targets = _target_names(rows)
    with target.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        accuracy_columns = [f"acc_{t}" for t in targets]
        writer.writerow(
            ["label", "seed", "source_acc", *accuracy_columns, "mean_target_acc", "final_stage_mmd"]
        )
        for row in rows:
            writer.writerow(
                [
                    row.label,
                    row.seed,
                    f"{row.source_accuracy:.6f}",
                    *(f"{row.target_accuracy.get(t, float('nan')):.6f}" for t in targets),
                    f"{row.mean_target_accuracy:.6f}",
                    f"{row.final_stage_mmd:.6e}",
                ]
            )
    return target


def summarize(rows: list[SweepRow]) -> list[dict[str, float | str | int]]:
    """Mean, min and max over seeds for every cell, in first-seen cell order."""
    by_label: dict[str, list[SweepRow]] = {}
    for row in rows:
        by_label.setdefault(row.label, []).append(row)
    targets = _target_names(rows)
    summary: list[dict[str, float | str | int]] = []
    for label, group in by_label.items():
        entry: dict[str, float | str | int] = {"label": label, "seeds": len(group)}
        columns = {
            "source_acc": [r.source_accuracy for r in group],
            **{f"acc_{t}": [r.target_accuracy[t] for r in group] for t in targets},
            "mean_target_acc": [r.mean_target_accuracy for r in group],
            "final_stage_mmd": [r.final_stage_mmd for r in group],
        }
        for column, values in columns.items():
            array = np.asarray(values, dtype=np.float64)
            entry[f"{column}_mean"] = float(array.mean())
            entry[f"{column}_min"] = float(array.min())
            entry[f"{column}_max"] = float(array.max())
        summary.append(entry)
    return summary


def write_summary_csv(rows: list[SweepRow], path: str | Path) -> Path:
    """One line per cell with mean/min/max over seeds."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    summary = summarize(rows)
    with target.open("w", newline="", encoding="utf-8") as handle:
        if not summary:
            handle.write("label,seeds\n")
            return target
        writer = csv.DictWriter(handle, fieldnames=list(summary[0]))
        writer.writeheader()
        for entry in summary:
            writer.writerow(
                {k: f"{v:.6f}" if isinstance(v, float) else v for k, v in entry.items()}
            )
    return target
