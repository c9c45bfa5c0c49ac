"""Desk-scale experiment checks on the full default benchmark.

These train dozens of networks and take hours of CPU; run with ``pytest -m slow``.
Set ``NORMPERTURB_JOBS`` to spread sweep cells over worker processes.
"""

from pathlib import Path

import numpy as np
import pytest

from src.config import load_settings
from src.normperturb.models.dataset import Benchmark, ImageSet
from src.normperturb.models.experiment import ExperimentConfig, load_experiment_config
from src.normperturb.models.network import NetworkConfig, StageSpec
from src.normperturb.models.reports import SweepRow
from src.normperturb.models.sweep import BASELINE_LABEL, SweepGrid, preset
from src.normperturb.services.datasets import load_or_generate
from src.normperturb.services.diagnostics import channel_subset_transfer, sensitivity_ranking
from src.normperturb.services.domains import make_benchmark
from src.normperturb.services.network import ConvNet
from src.normperturb.services.sweep import run_sweep
from src.normperturb.services.trainer import train
from src.normperturb.tensor.tensor import Tensor
from src.normperturb.utils.seeding import component_rng


pytestmark = pytest.mark.slow

NP_LABEL = "np G(1, 0.75) p=0.5 @1+2"
P0_LABEL = "np G(1, 0.75) p=0 @1+2"


@pytest.fixture(scope="module")
def config() -> ExperimentConfig:
    return load_experiment_config()


@pytest.fixture(scope="module")
def benchmark(config: ExperimentConfig, tmp_path_factory: pytest.TempPathFactory) -> Benchmark:
    directory: Path = tmp_path_factory.mktemp("desk") / "dataset"
    return load_or_generate(
        directory,
        seed=config.dataset_seed,
        train_size=config.dataset.train_size,
        val_size=config.dataset.val_size,
        image_size=config.dataset.image_size,
    )


def _sweep(grid: SweepGrid, config: ExperimentConfig, benchmark: Benchmark) -> list[SweepRow]:
    return run_sweep(
        grid,
        benchmark,
        network=config.network,
        training=config.training_config(),
        gap_target="fog",
        kernel=config.diagnostics.kernel,
        jobs=load_settings().jobs,
    )


def _mean(rows: list[SweepRow], label: str, field: str, target: str | None = None) -> float:
    picked = [r for r in rows if r.label == label]
    assert picked, label
    if field == "target":
        if target is None:
            return float(np.mean([r.mean_target_accuracy for r in picked]))
        return float(np.mean([r.target_accuracy[target] for r in picked]))
    return float(np.mean([getattr(r, field) for r in picked]))


@pytest.fixture(scope="module")
def probability_rows(config: ExperimentConfig, benchmark: Benchmark) -> list[SweepRow]:
    return _sweep(preset("probability"), config, benchmark)


def test_np_improves_every_target(probability_rows: list[SweepRow], benchmark: Benchmark) -> None:
    """Test NP at p=0.5 gains at least 3 points on each target and costs at most 2 on source."""
    for target in benchmark.targets:
        gain = _mean(probability_rows, NP_LABEL, "target", target) - _mean(
            probability_rows, P0_LABEL, "target", target
        )
        assert gain >= 0.03, target
    source_drop = _mean(probability_rows, P0_LABEL, "source_accuracy") - _mean(
        probability_rows, NP_LABEL, "source_accuracy"
    )
    assert source_drop <= 0.02


def test_np_blends_final_stage_statistics(probability_rows: list[SweepRow]) -> None:
    """Test NP shrinks the final-stage fog gap by at least 20 percent."""
    np_gap = _mean(probability_rows, NP_LABEL, "final_stage_mmd")
    baseline_gap = _mean(probability_rows, P0_LABEL, "final_stage_mmd")
    assert np_gap <= 0.8 * baseline_gap


def test_every_positive_probability_beats_zero(probability_rows: list[SweepRow]) -> None:
    """Test p in {0.25, 0.5, 0.75, 1} all beat p=0 on mean target accuracy."""
    baseline = _mean(probability_rows, P0_LABEL, "target")
    for p in ("0.25", "0.5", "0.75", "1"):
        label = f"np G(1, 0.75) p={p} @1+2"
        assert _mean(probability_rows, label, "target") > baseline, label


def test_noise_types_beat_baseline(config: ExperimentConfig, benchmark: Benchmark) -> None:
    """Test every centred noise family beats the unperturbed baseline."""
    rows = _sweep(preset("noise-types"), config, benchmark)
    baseline = _mean(rows, BASELINE_LABEL, "target")
    for label in {r.label for r in rows} - {BASELINE_LABEL}:
        assert _mean(rows, label, "target") > baseline, label


def test_shallow_placement_beats_deep(config: ExperimentConfig, benchmark: Benchmark) -> None:
    """Test perturbing stages 1 and 2 beats perturbing stage 3 only."""
    grid = SweepGrid(placements=[[1, 2], [3]])
    rows = _sweep(grid, config, benchmark)
    assert _mean(rows, NP_LABEL, "target") > _mean(rows, "np G(1, 0.75) p=0.5 @3", "target")


def test_np_plus_with_augmentation(config: ExperimentConfig, benchmark: Benchmark) -> None:
    """Test NP+ with augmentation is no worse than NP alone, within half a point."""
    rows = _sweep(preset("np-plus"), config, benchmark)
    np_plain = _mean(rows, NP_LABEL, "target")
    np_plus_aug = _mean(rows, "np_plus G(1, 0.75) p=0.5 @1+2 +aug", "target")
    assert np_plus_aug >= np_plain - 0.005


def _identity_stem() -> ConvNet:
    config = NetworkConfig(
        num_classes=4, input_size=32, kernel_size=1, stages=[StageSpec(channels=3)]
    )
    params = {
        "stage1.conv1.weight": Tensor(np.eye(3).reshape(3, 3, 1, 1), requires_grad=True),
        "stage1.conv1.bias": Tensor(np.zeros(3), requires_grad=True),
        "head.weight": Tensor(np.zeros((4, 3)), requires_grad=True),
        "head.bias": Tensor(np.zeros(4), requires_grad=True),
    }
    return ConvNet(config, params)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_warm_shift_ranks_red_and_blue(seed: int) -> None:
    """Test the channels a warm shift rescales are the two most sensitive ones."""
    bench = make_benchmark(seed, train_size=8, val_size=400, image_size=32)
    report = sensitivity_ranking(
        _identity_stem(), (bench.source_val, bench.targets["warm"]), stage=1, top_k=2
    )
    assert set(report.top_k_channels) == {0, 2}
    assert report.has_style_signal


def test_sensitive_channels_carry_style(config: ExperimentConfig, benchmark: Benchmark) -> None:
    """Test AdaIN on the top fifth of stem channels matches style better than on the rest."""
    net = ConvNet.initialize(config.network, component_rng(config.seed, "init"))
    trained = train(net, benchmark.source_train, config.training_config()).net
    content: ImageSet = benchmark.source_val
    style = benchmark.targets["warm"]

    most = channel_subset_transfer(trained, content, style, 1, 0.2, "most-sensitive")
    least = channel_subset_transfer(trained, content, style, 1, 0.8, "least-sensitive")

    assert most.style_match_mmd < least.style_match_mmd
