"""Ablation sweep grid models."""

import itertools
import logging
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from src.normperturb.models.noise import NoiseSpec, NpSiteConfig


logger = logging.getLogger(__name__)

BASELINE_LABEL = "baseline"


class SweepCell(BaseModel):
    """One trainable configuration of a sweep."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    label: str
    sites: list[NpSiteConfig] = Field(default_factory=list)
    augment: bool = False


class SkippedCell(BaseModel):
    model_config = ConfigDict(frozen=True)

    label: str
    reason: str


class SweepGrid(BaseModel):
    """Cartesian grid of perturbation settings, each trained under every seed.

    Attributes:
        probabilities: Gate probabilities p.
        noises: Noise distributions for α and β.
        placements: Stage lists receiving a site, e.g. ``[[1, 2], [3]]``.
        modes: ``np`` and/or ``np_plus``.
        granularities: channel, activation or spatial noise shape.
        augment: Photometric augmentation on/off.
        seeds: Training seeds per cell; the sweep command adds the top-level seed.
        include_baseline: Add an NP-free, augmentation-free cell.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    probabilities: list[float] = Field(default_factory=lambda: [0.5], min_length=1)
    noises: list[NoiseSpec] = Field(default_factory=lambda: [NoiseSpec()], min_length=1)
    placements: list[list[int]] = Field(default_factory=lambda: [[1, 2]], min_length=1)
    modes: list[Literal["np", "np_plus"]] = Field(default_factory=lambda: ["np"], min_length=1)
    granularities: list[Literal["channel", "activation", "spatial"]] = Field(
        default_factory=lambda: ["channel"], min_length=1
    )
    augment: list[bool] = Field(default_factory=lambda: [False], min_length=1)
    seeds: list[int] = Field(default_factory=lambda: [0, 1, 2], min_length=1)
    include_baseline: bool = False

    def offset_seeds(self, base: int) -> "SweepGrid":
        """Same grid with every training seed shifted by ``base``."""
        return self.model_copy(update={"seeds": [base + seed for seed in self.seeds]})

    def expand(self) -> tuple[list[SweepCell], list[SkippedCell]]:
        """Enumerate valid cells; invalid combinations are returned with the reason."""
        cells: list[SweepCell] = []
        skipped: list[SkippedCell] = []
        if self.include_baseline:
            cells.append(SweepCell(label=BASELINE_LABEL))
        grid = itertools.product(
            self.modes,
            self.noises,
            self.placements,
            self.probabilities,
            self.granularities,
            self.augment,
        )
        for mode, noise, placement, probability, granularity, augment in grid:
            label = cell_label(mode, noise, placement, probability, granularity, augment)
            try:
                sites = [
                    NpSiteConfig(
                        site_id=stage,
                        probability=probability,
                        mode=mode,
                        noise=noise,
                        granularity=granularity,
                    )
                    for stage in placement
                ]
            except ValidationError as exc:
                reason = "; ".join(str(err["msg"]) for err in exc.errors())
                skipped.append(SkippedCell(label=label, reason=reason))
                continue
            if not placement:
                skipped.append(SkippedCell(label=label, reason="placement names no stage"))
                continue
            cells.append(SweepCell(label=label, sites=sites, augment=augment))
        return cells, skipped


def cell_label(
    mode: str,
    noise: NoiseSpec,
    placement: list[int],
    probability: float,
    granularity: str,
    augment: bool,
) -> str:
    """Human-readable cell name such as ``np G(1, 0.75) p=0.5 @1+2``."""
    stages = "+".join(str(s) for s in placement)
    label = f"{mode} {noise.label} p={probability:g} @{stages}"
    if granularity != "channel":
        label += f" {granularity}"
    if augment:
        label += " +aug"
    return label


PRESETS: dict[str, SweepGrid] = {
    "probability": SweepGrid(probabilities=[0.0, 0.25, 0.5, 0.75, 1.0]),
    "noise-types": SweepGrid(
        noises=[
            NoiseSpec.beta(0.75, 0.75),
            NoiseSpec.uniform(0.0, 2.0),
            NoiseSpec.gaussian(1.0, 0.5),
            NoiseSpec.gaussian(1.0, 0.75),
            NoiseSpec.gaussian(1.0, 1.0),
        ],
        include_baseline=True,
    ),
    "placement": SweepGrid(
        placements=[[1], [2], [3], [1, 2], [1, 2, 3]], include_baseline=True
    ),
    "granularity": SweepGrid(
        granularities=["channel", "activation", "spatial"], include_baseline=True
    ),
    "np-plus": SweepGrid(
        modes=["np", "np_plus"], augment=[False, True], include_baseline=True
    ),
}


def preset(name: str) -> SweepGrid:
    """Return a named preset grid.

    Raises:
        KeyError: If no preset has that name.
    """
    if name not in PRESETS:
        raise KeyError(f"unknown sweep preset {name!r}; choose from {sorted(PRESETS)}")
    return PRESETS[name]
