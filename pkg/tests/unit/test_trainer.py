"""Unit tests for the training loop, evaluation and metrics files."""

import logging
from pathlib import Path

import numpy as np
import pytest

from src.normperturb.models.dataset import ImageSet
from src.normperturb.models.network import EpochMetrics, TrainConfig
from src.normperturb.services.network import ConvNet
from src.normperturb.services.trainer import (
    TrainingDivergedError,
    evaluate,
    evaluate_with_loss,
    read_metrics_csv,
    train,
    write_metrics_csv,
)
from tests.fixtures.images import color_separable_set, np_sites, tiny_network_config


def _net(sites: bool = False, num_classes: int = 2) -> ConvNet:
    config = tiny_network_config(
        np_sites(probability=0.5) if sites else None, num_classes=num_classes, input_size=8
    )
    return ConvNet.initialize(config, np.random.default_rng(0))


def _config(**overrides: object) -> TrainConfig:
    values: dict[str, object] = {
        "epochs": 2,
        "batch_size": 8,
        "precision": "float64",
        "seed": 1,
    }
    values.update(overrides)
    return TrainConfig.model_validate(values)


class TestTrain:
    """Tests for train()."""

    def test_learns_separable_colors(self) -> None:
        """Test a color-separable set is fitted to at least 95% train accuracy."""
        data = color_separable_set(200, seed=0)
        result = train(_net(), data, _config(epochs=10, batch_size=16, learning_rate=0.05))
        assert evaluate(result.net, data) >= 0.95

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_loss_decreases(self, seed: int) -> None:
        """Test the epoch-10 train loss is below the epoch-1 loss."""
        data = color_separable_set(128, seed=seed)
        cfg = _config(epochs=10, batch_size=16, learning_rate=0.05, seed=seed)
        net = ConvNet.initialize(_net().config, np.random.default_rng(seed))
        losses = [m.loss for m in train(net, data, cfg).history if m.split == "train"]
        assert len(losses) == 10
        assert losses[-1] < losses[0]

    def test_zero_learning_rate_keeps_weights(self) -> None:
        """Test lr = 0 leaves every parameter unchanged."""
        net = _net(sites=True)
        result = train(net, color_separable_set(16, seed=1), _config(learning_rate=0.0))
        for (_, before), (_, after) in zip(net.parameters(), result.net.parameters()):
            np.testing.assert_array_equal(before.data, after.data)

    def test_zero_learning_rate_keeps_loss(self) -> None:
        """Test lr = 0 without perturbation gives the same train loss every epoch."""
        cfg = _config(epochs=3, learning_rate=0.0)
        result = train(_net(), color_separable_set(16, seed=1), cfg)
        losses = [m.loss for m in result.history if m.split == "train"]
        assert len(losses) == 3
        assert losses[1] == pytest.approx(losses[0], rel=1e-12)
        assert losses[2] == pytest.approx(losses[0], rel=1e-12)

    def test_input_network_untouched(self) -> None:
        """Test train() works on a copy."""
        net = _net()
        before = net.params["head.weight"].data.copy()
        train(net, color_separable_set(16, seed=1), _config())
        np.testing.assert_array_equal(net.params["head.weight"].data, before)

    def test_deterministic(self) -> None:
        """Test equal seeds give identical weights and history."""
        data = color_separable_set(24, seed=2)
        cfg = _config(augment=True)
        a = train(_net(sites=True), data, cfg)
        b = train(_net(sites=True), data, cfg)
        assert a.history == b.history
        for (_, pa), (_, pb) in zip(a.net.parameters(), b.net.parameters()):
            np.testing.assert_array_equal(pa.data, pb.data)

    def test_seed_changes_run(self) -> None:
        """Test a different seed gives a different trajectory."""
        data = color_separable_set(24, seed=2)
        a = train(_net(sites=True), data, _config(seed=1))
        b = train(_net(sites=True), data, _config(seed=2))
        head_a = a.net.params["head.weight"].data
        head_b = b.net.params["head.weight"].data
        assert not np.array_equal(head_a, head_b)

    def test_frozen_stages(self) -> None:
        """Test frozen stage weights stay fixed while the rest train."""
        net = _net()
        result = train(net, color_separable_set(16, seed=3), _config(frozen_stages=1))
        np.testing.assert_array_equal(
            result.net.params["stage1.conv1.weight"].data, net.params["stage1.conv1.weight"].data
        )
        assert not np.array_equal(
            result.net.params["head.weight"].data, net.params["head.weight"].data
        )

    def test_history_has_train_and_val(self) -> None:
        """Test one train and one val row per epoch."""
        data = color_separable_set(16, seed=4)
        result = train(_net(), data, _config(), val_set=color_separable_set(8, seed=5))
        assert [(m.epoch, m.split) for m in result.history] == [
            (1, "train"),
            (1, "val"),
            (2, "train"),
            (2, "val"),
        ]
        final = result.final("val")
        assert final is not None and final.epoch == 2

    def test_float32_training(self) -> None:
        """Test the precision setting selects the training dtype."""
        result = train(_net(), color_separable_set(16, seed=6), _config(precision="float32"))
        assert result.net.dtype == np.float32

    def test_divergence_raises(self, caplog: pytest.LogCaptureFixture) -> None:
        """Test an exploding learning rate aborts with epoch, step and rate."""
        cfg = _config(epochs=3, batch_size=4, learning_rate=1e38, precision="float32")
        with np.errstate(all="ignore"), caplog.at_level(logging.ERROR):
            with pytest.raises(TrainingDivergedError) as info:
                train(_net(), color_separable_set(16, seed=7), cfg)
        assert info.value.learning_rate == 1e38
        assert info.value.epoch >= 1 and info.value.step >= 1
        assert any("diverged" in record.getMessage() for record in caplog.records)

    def test_needs_two_images(self) -> None:
        """Test a one-image training set is rejected."""
        with pytest.raises(ValueError):
            train(_net(), color_separable_set(1, seed=8), _config())


class TestEvaluate:
    """Tests for evaluation helpers."""

    def test_accuracy_matches_predictions(self) -> None:
        """Test evaluate and evaluate_with_loss agree on accuracy."""
        data = color_separable_set(20, seed=9)
        net = _net()
        loss, accuracy = evaluate_with_loss(net, data, batch_size=7)
        assert accuracy == pytest.approx(evaluate(net, data))
        assert loss > 0.0

    def test_random_weights_score_chance(self) -> None:
        """Test an untrained net on 4 balanced, content-free classes scores about 1/4."""
        rng = np.random.default_rng(21)
        n, k = 400, 4
        data = ImageSet(
            domain="noise",
            images=rng.random((n, 3, 8, 8)),
            labels=rng.permutation(np.arange(n) % k),
            content_ids=np.arange(n),
        )
        accuracy = evaluate(_net(num_classes=k), data)
        p = 1.0 / k
        assert abs(accuracy - p) <= 3.0 * np.sqrt(p * (1.0 - p) / n)

    def test_empty_dataset(self) -> None:
        """Test evaluation on an empty set is rejected."""
        empty = ImageSet(
            domain="empty",
            images=np.zeros((0, 3, 8, 8)),
            labels=np.zeros(0, dtype=np.int64),
            content_ids=np.zeros(0, dtype=np.int64),
        )
        with pytest.raises(ValueError, match="empty"):
            evaluate(_net(), empty)
        with pytest.raises(ValueError, match="empty"):
            evaluate_with_loss(_net(), empty)


def test_metrics_csv_round_trip(tmp_path: Path) -> None:
    """Test metrics survive the CSV exactly."""
    history = [
        EpochMetrics(epoch=1, split="train", loss=0.1 + 0.2, accuracy=2 / 3),
        EpochMetrics(epoch=1, split="val", loss=1.25, accuracy=0.5),
    ]
    path = write_metrics_csv(history, tmp_path / "sub" / "metrics.csv")
    assert path.read_text(encoding="utf-8").splitlines()[0] == "epoch,split,loss,accuracy"
    assert read_metrics_csv(path) == history
