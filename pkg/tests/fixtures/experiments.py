"""Experiment configs for end-to-end tests."""

from pathlib import Path
from typing import Any


def tiny_experiment_dict(output_dir: Path) -> dict[str, Any]:
    """Experiment config small enough to train in well under a second per epoch."""
    return {
        "seed": 3,
        "dataset": {"train_size": 24, "val_size": 12, "image_size": 16},
        "network": {
            "input_size": 16,
            "stages": [{"channels": 4, "blocks": 1}, {"channels": 8, "blocks": 1}],
        },
        "training": {"epochs": 2, "batch_size": 8, "precision": "float64"},
        "np": {"sites": [{"site_id": 1, "probability": 0.5}, {"site_id": 2, "probability": 0.5}]},
        "diagnostics": {
            "sensitivity_stage": 1,
            "sweep": {"probabilities": [0.0, 0.25, 0.5, 0.75, 1.0], "seeds": [0, 1, 2]},
        },
        "output_dir": str(output_dir),
    }
