"""Deterministic splitting of one experiment seed into component streams."""

from __future__ import annotations

import zlib
from dataclasses import dataclass

import numpy as np


def _sequence(seed: int, component: str) -> np.random.SeedSequence:
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    return np.random.SeedSequence([seed, zlib.crc32(component.encode("utf-8"))])


def derive_seed(seed: int, component: str) -> int:
    """Return a 32-bit seed for ``component`` derived from ``seed``."""
    return int(_sequence(seed, component).generate_state(1, dtype=np.uint32)[0])


def component_rng(seed: int, component: str) -> np.random.Generator:
    """Return an independent generator for ``component`` under ``seed``."""
    return np.random.default_rng(_sequence(seed, component))


def item_rng(seed: int, index: int) -> np.random.Generator:
    """Per-item generator so items can be produced in any order."""
    return np.random.default_rng([seed, index])


@dataclass
class RunStreams:
    """Independent random streams for one training run."""

    init: np.random.Generator
    shuffle: np.random.Generator
    noise: np.random.Generator
    gates: np.random.Generator
    augment: np.random.Generator

    @classmethod
    def from_seed(cls, seed: int) -> RunStreams:
        return cls(
            init=component_rng(seed, "init"),
            shuffle=component_rng(seed, "shuffle"),
            noise=component_rng(seed, "noise"),
            gates=component_rng(seed, "gates"),
            augment=component_rng(seed, "augment"),
        )
