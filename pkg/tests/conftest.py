"""Shared test configuration and fixtures."""

import json
import logging
from collections.abc import Iterator
from pathlib import Path

import numpy as np
import pytest

from src.normperturb.models.dataset import Benchmark
from src.normperturb.services.domains import make_benchmark
from tests.fixtures.experiments import tiny_experiment_dict


@pytest.fixture(autouse=True)
def restore_root_logging() -> Iterator[None]:
    """Undo handler changes made by setup_logging inside a test."""
    root = logging.getLogger()
    handlers = list(root.handlers)
    level = root.level
    yield
    root.handlers[:] = handlers
    root.setLevel(level)


@pytest.fixture
def rng() -> np.random.Generator:
    """Seeded generator for test data."""
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def tiny_benchmark() -> Benchmark:
    """Small 16×16 benchmark shared across tests (read-only)."""
    return make_benchmark(seed=11, train_size=32, val_size=16, image_size=16)


@pytest.fixture
def tiny_config_path(tmp_path: Path) -> Path:
    """Tiny experiment config written to disk, outputs under ``tmp_path/out``."""
    path = tmp_path / "experiment.json"
    path.write_text(json.dumps(tiny_experiment_dict(tmp_path / "out")), encoding="utf-8")
    return path
