"""Mini-batch SGD training loop, evaluation and metrics CSV."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from src.normperturb.models.dataset import ImageSet
from src.normperturb.models.network import EpochMetrics, TrainConfig
from src.normperturb.services.augment import augment_batch
from src.normperturb.services.network import ConvNet
from src.normperturb.services.optim import SGD
from src.normperturb.tensor.functional import softmax_cross_entropy
from src.normperturb.tensor.tensor import NonFiniteError, Tensor, anomaly_detection
from src.normperturb.utils.seeding import RunStreams


logger = logging.getLogger(__name__)

METRICS_COLUMNS = ("epoch", "split", "loss", "accuracy")


class TrainingDivergedError(RuntimeError):
    """Training produced NaN/Inf values.

    Attributes:
        epoch: Epoch (1-based) in which the failure occurred.
        step: Step within that epoch (1-based).
        learning_rate: Learning rate in use.
    """

    def __init__(self, epoch: int, step: int, learning_rate: float, reason: str) -> None:
        super().__init__(
            f"training diverged at epoch {epoch}, step {step} (lr={learning_rate}): {reason}"
        )
        self.epoch = epoch
        self.step = step
        self.learning_rate = learning_rate


@dataclass
class TrainResult:
    net: ConvNet
    history: list[EpochMetrics] = field(default_factory=list)

    def final(self, split: str) -> Optional[EpochMetrics]:
        rows = [m for m in self.history if m.split == split]
        return rows[-1] if rows else None


def _batches(order: np.ndarray, batch_size: int) -> list[np.ndarray]:
    # a trailing single sample has no batch statistics
    chunks = [order[i : i + batch_size] for i in range(0, len(order), batch_size)]
    return [chunk for chunk in chunks if len(chunk) >= 2]


def evaluate_with_loss(
    net: ConvNet, dataset: ImageSet, batch_size: int = 256
) -> tuple[float, float]:
    """Eval-mode mean cross-entropy and accuracy.

    Raises:
        ValueError: If the dataset is empty.
    """
    if len(dataset) == 0:
        raise ValueError(f"cannot evaluate on empty dataset '{dataset.domain}'")
    total_loss = 0.0
    correct = 0
    for start in range(0, len(dataset), batch_size):
        labels = dataset.labels[start : start + batch_size]
        images = Tensor(dataset.images[start : start + batch_size], dtype=net.dtype)
        logits = net.forward(images, training=False).logits
        total_loss += softmax_cross_entropy(logits, labels).item() * len(labels)
        correct += int((logits.data.argmax(axis=1) == labels).sum())
    return total_loss / len(dataset), correct / len(dataset)


def evaluate(net: ConvNet, dataset: ImageSet, batch_size: int = 256) -> float:
    """Fraction of images classified correctly in eval mode.

    Raises:
        ValueError: If the dataset is empty.
    """
    if len(dataset) == 0:
        raise ValueError(f"cannot evaluate on empty dataset '{dataset.domain}'")
    predictions = net.predict(dataset.images, batch_size=batch_size)
    return float((predictions == dataset.labels).mean())


def train(
    net: ConvNet,
    train_set: ImageSet,
    cfg: TrainConfig,
    val_set: Optional[ImageSet] = None,
) -> TrainResult:
    """Train a copy of ``net`` with momentum SGD.

    All randomness (shuffling, perturbation noise and gates, augmentation) comes
    from streams derived from ``cfg.seed``, so equal inputs give equal weights.

    Args:
        net: Starting weights; left untouched.
        train_set: Labeled training images.
        cfg: Optimisation settings.
        val_set: Optional set evaluated after every epoch.

    Returns:
        Trained network and per-epoch train/val metrics.

    Raises:
        ValueError: If the training set has fewer than two images.
        TrainingDivergedError: If a loss, activation or gradient becomes non-finite.
    """
    if len(train_set) < 2:
        raise ValueError(f"need at least 2 training images, got {len(train_set)}")
    dtype = np.dtype(cfg.precision)
    model = net.astype(dtype)
    trainable = model.trainable_parameters(cfg.frozen_stages)
    trainable_names = {name for name, _ in trainable}
    for name, param in model.parameters():
        param.requires_grad = name in trainable_names

    streams = RunStreams.from_seed(cfg.seed)
    optimizer = SGD(
        trainable, lr=cfg.learning_rate, momentum=cfg.momentum, weight_decay=cfg.weight_decay
    )
    result = TrainResult(net=model)
    logger.info(
        "Training started",
        extra={
            "images": len(train_set),
            "epochs": cfg.epochs,
            "batch_size": cfg.batch_size,
            "np_sites": len(model.config.np_sites),
            "frozen_stages": cfg.frozen_stages,
        },
    )

    for epoch in range(1, cfg.epochs + 1):
        order = streams.shuffle.permutation(len(train_set))
        total_loss = 0.0
        correct = 0
        seen = 0
        for step, idx in enumerate(_batches(order, cfg.batch_size), start=1):
            batch = train_set.subset(idx)
            images, labels = batch.images, batch.labels
            if cfg.augment:
                images = augment_batch(images, streams.augment)
            try:
                with anomaly_detection(cfg.detect_anomalies):
                    out = model.forward(
                        Tensor(images, dtype=dtype),
                        training=True,
                        rng=streams.noise,
                        gate_rng=streams.gates,
                    )
                    loss = softmax_cross_entropy(out.logits, labels)
                    if not np.isfinite(loss.item()):
                        raise NonFiniteError(f"loss is {loss.item()}")
                    optimizer.zero_grad()
                    loss.backward()
                    optimizer.step()
            except NonFiniteError as exc:
                logger.error(
                    f"Training diverged: {exc}",
                    extra={"epoch": epoch, "step": step, "learning_rate": cfg.learning_rate},
                )
                raise TrainingDivergedError(epoch, step, cfg.learning_rate, str(exc)) from exc
            total_loss += loss.item() * len(idx)
            correct += int((out.logits.data.argmax(axis=1) == labels).sum())
            seen += len(idx)

        train_metrics = EpochMetrics(
            epoch=epoch, split="train", loss=total_loss / seen, accuracy=correct / seen
        )
        result.history.append(train_metrics)
        log_extra: dict[str, float] = {
            "epoch": epoch,
            "train_loss": train_metrics.loss,
            "train_acc": train_metrics.accuracy,
        }
        if val_set is not None and len(val_set):
            val_loss, val_acc = evaluate_with_loss(model, val_set)
            result.history.append(
                EpochMetrics(epoch=epoch, split="val", loss=val_loss, accuracy=val_acc)
            )
            log_extra.update(val_loss=val_loss, val_acc=val_acc)
        logger.info(f"Epoch {epoch}/{cfg.epochs} finished", extra=log_extra)

    for _, param in model.parameters():
        param.requires_grad = True
    return result


def write_metrics_csv(history: list[EpochMetrics], path: str | Path) -> Path:
    """Write (epoch, split, loss, accuracy) rows with full float precision."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with target.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(METRICS_COLUMNS)
        for row in history:
            loss, accuracy = repr(float(row.loss)), repr(float(row.accuracy))
            writer.writerow([row.epoch, row.split, loss, accuracy])
    return target


def read_metrics_csv(path: str | Path) -> list[EpochMetrics]:
    with Path(path).open(newline="", encoding="utf-8") as handle:
        return [
            EpochMetrics(
                epoch=int(row["epoch"]),
                split=row["split"],  # type: ignore[arg-type]
                loss=float(row["loss"]),
                accuracy=float(row["accuracy"]),
            )
            for row in csv.DictReader(handle)
        ]
