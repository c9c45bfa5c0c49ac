"""Benchmark persistence: one ``.tsr`` image blob per split plus ``index.json``."""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from src.normperturb.models.dataset import Benchmark, ImageSet
from src.normperturb.services.domains import make_benchmark
from src.normperturb.tensor.serialization import TSR_SUFFIX, load_tsr, save_tsr


logger = logging.getLogger(__name__)

INDEX_NAME = "index.json"
SOURCE_TRAIN = "source_train"
SOURCE_VAL = "source_val"


class IndexEntry(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    label: int = Field(ge=0)
    domain: str
    content_id: int = Field(ge=0)


class SplitIndex(BaseModel):
    """One stored split: its blob file and per-item metadata."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    file: str
    domain: str
    items: list[IndexEntry]


class DatasetIndex(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    seed: int = Field(ge=0)
    train_size: int = Field(ge=1)
    val_size: int = Field(ge=1)
    image_size: int = Field(ge=1)
    splits: dict[str, SplitIndex]

    @property
    def target_names(self) -> list[str]:
        return [name for name in self.splits if name not in (SOURCE_TRAIN, SOURCE_VAL)]


def _split_index(name: str, dataset: ImageSet) -> SplitIndex:
    return SplitIndex(
        file=f"{name}{TSR_SUFFIX}",
        domain=dataset.domain,
        items=[
            IndexEntry(label=int(label), domain=dataset.domain, content_id=int(cid))
            for label, cid in zip(dataset.labels, dataset.content_ids)
        ],
    )


def save_benchmark(benchmark: Benchmark, directory: str | Path, seed: int) -> Path:
    """Write every split and the index; returns the index path."""
    root = Path(directory)
    root.mkdir(parents=True, exist_ok=True)
    splits = {SOURCE_TRAIN: benchmark.source_train, SOURCE_VAL: benchmark.source_val}
    splits.update(benchmark.targets)
    entries: dict[str, SplitIndex] = {}
    for name, dataset in splits.items():
        entries[name] = _split_index(name, dataset)
        save_tsr(root / entries[name].file, dataset.images)
    index = DatasetIndex(
        seed=seed,
        train_size=len(benchmark.source_train),
        val_size=len(benchmark.source_val),
        image_size=int(benchmark.source_train.images.shape[-1]),
        splits=entries,
    )
    path = root / INDEX_NAME
    path.write_text(index.model_dump_json(indent=2), encoding="utf-8")
    logger.info(f"Benchmark saved to {root}", extra={"splits": list(entries)})
    return path


def read_index(directory: str | Path) -> DatasetIndex:
    """Read ``index.json``.

    Raises:
        FileNotFoundError: If the directory holds no index.
    """
    path = Path(directory) / INDEX_NAME
    if not path.is_file():
        raise FileNotFoundError(f"no dataset index at {path}")
    return DatasetIndex.model_validate(json.loads(path.read_text(encoding="utf-8")))


def _load_split(root: Path, split: SplitIndex) -> ImageSet:
    blob = root / split.file
    if not blob.is_file():
        raise FileNotFoundError(f"dataset blob missing: {blob}")
    images = load_tsr(blob)
    if images.shape[0] != len(split.items):
        raise ValueError(
            f"{blob} holds {images.shape[0]} images but the index lists {len(split.items)}"
        )
    return ImageSet(
        domain=split.domain,
        images=images,
        labels=np.array([item.label for item in split.items], dtype=np.int64),
        content_ids=np.array([item.content_id for item in split.items], dtype=np.int64),
    )


def load_benchmark(directory: str | Path) -> Benchmark:
    """Load a benchmark written by :func:`save_benchmark`.

    Raises:
        FileNotFoundError: If the index or a split blob is missing.
        ValueError: If a blob disagrees with the index.
    """
    root = Path(directory)
    index = read_index(root)
    for required in (SOURCE_TRAIN, SOURCE_VAL):
        if required not in index.splits:
            raise ValueError(f"dataset index lacks the {required} split")
    return Benchmark(
        source_train=_load_split(root, index.splits[SOURCE_TRAIN]),
        source_val=_load_split(root, index.splits[SOURCE_VAL]),
        targets={name: _load_split(root, index.splits[name]) for name in index.target_names},
    )


def load_or_generate(
    directory: str | Path,
    seed: int,
    train_size: int,
    val_size: int,
    image_size: int,
    regenerate: bool = False,
) -> Benchmark:
    """Load the stored benchmark when it matches the request, else generate and store it."""
    root = Path(directory)
    stored: Optional[DatasetIndex] = None
    if not regenerate and (root / INDEX_NAME).is_file():
        stored = read_index(root)
        wanted = (seed, train_size, val_size, image_size)
        found = (stored.seed, stored.train_size, stored.val_size, stored.image_size)
        if found == wanted:
            logger.info(f"Loading benchmark from {root}")
            return load_benchmark(root)
        logger.warning(
            "Stored benchmark does not match the configuration, regenerating",
            extra={"stored": list(found), "requested": list(wanted)},
        )
    benchmark = make_benchmark(
        seed, train_size=train_size, val_size=val_size, image_size=image_size
    )
    save_benchmark(benchmark, root, seed)
    return benchmark
