"""Experiment configuration: one JSON document drives every command."""

import json
import logging
from pathlib import Path
from typing import Any, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from src.normperturb.models.network import NetworkConfig, TrainConfig
from src.normperturb.models.noise import NpSiteConfig
from src.normperturb.models.reports import KernelSpec
from src.normperturb.models.sweep import SweepGrid
from src.normperturb.utils.seeding import derive_seed


logger = logging.getLogger(__name__)

DEFAULT_CONFIG_PATH = Path(__file__).resolve().parent.parent / "default.json"


class ConfigError(ValueError):
    """Experiment configuration could not be parsed or validated.

    Attributes:
        problems: One message per failing line or field.
    """

    def __init__(self, source: str, problems: list[str]) -> None:
        super().__init__(f"invalid configuration {source}: " + "; ".join(problems))
        self.source = source
        self.problems = problems


def _default_sites() -> list[NpSiteConfig]:
    return [NpSiteConfig(site_id=1), NpSiteConfig(site_id=2)]


class DatasetSection(BaseModel):
    """Benchmark generation and storage.

    Attributes:
        seed: Benchmark seed; derived from the top-level seed when omitted.
        train_size: Source training images.
        val_size: Validation images per domain.
        image_size: Square image extent.
        regenerate: Ignore a stored dataset and generate again.
        directory: Dataset directory; ``<output_dir>/dataset`` when omitted.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    seed: Optional[int] = Field(default=None, ge=0)
    train_size: int = Field(default=2000, ge=2)
    val_size: int = Field(default=400, ge=2)
    image_size: int = Field(default=32, ge=8)
    regenerate: bool = False
    directory: Optional[str] = None


class NpSection(BaseModel):
    """Perturbation sites and the NP+ / augmentation switches."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    sites: list[NpSiteConfig] = Field(default_factory=_default_sites)
    np_plus: bool = False
    augment: bool = False

    def resolved_sites(self) -> list[NpSiteConfig]:
        if not self.np_plus:
            return list(self.sites)
        return [site.model_copy(update={"mode": "np_plus"}) for site in self.sites]


class DiagnosticsSection(BaseModel):
    """Settings for gap reports, sensitivity probes and sweeps.

    Attributes:
        kernel: MMD kernel.
        standardize: Also z-score statistics vectors before MMD.
        stages: Stages to report; all when omitted.
        gap_target: Target domain compared with the source in gap reports and sweeps.
        sensitivity_stage: Stage probed by sensitivity ranking and subset transfer.
        sensitivity_pair: Target domain paired with the source for sensitivity.
        transfer_fraction: Channel fraction for subset AdaIN.
        top_k: Channels listed in the sensitivity report; all when omitted.
        dump_stats: Write per-stage statistics as ``.tsr`` files.
        sweep: Ablation grid used by the sweep command.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    kernel: KernelSpec = Field(default_factory=KernelSpec)
    standardize: bool = False
    stages: Optional[list[int]] = None
    gap_target: str = "fog"
    sensitivity_stage: int = Field(default=1, ge=1)
    sensitivity_pair: str = "warm"
    transfer_fraction: float = Field(default=0.2, ge=0.0, le=1.0)
    top_k: Optional[int] = Field(default=None, ge=0)
    dump_stats: bool = False
    sweep: SweepGrid = Field(default_factory=SweepGrid)


class ExperimentConfig(BaseModel):
    """Complete experiment description.

    All randomness derives from ``seed``: the benchmark (unless pinned by
    ``dataset.seed``), weight initialisation, shuffling, noise and gates.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    seed: int = Field(default=0, ge=0)
    dataset: DatasetSection = Field(default_factory=DatasetSection)
    network: NetworkConfig = Field(default_factory=NetworkConfig)
    training: TrainConfig = Field(default_factory=TrainConfig)
    np: NpSection = Field(default_factory=NpSection)
    diagnostics: DiagnosticsSection = Field(default_factory=DiagnosticsSection)
    output_dir: str = "runs/default"

    @model_validator(mode="after")
    def check_cross_sections(self) -> "ExperimentConfig":
        """Validate references between sections.

        Raises:
            ValueError: If sites are declared in the network section, the np
                sites do not fit the network, or a diagnostics stage is missing.
        """
        if self.network.np_sites:
            raise ValueError("declare perturbation sites under np.sites, not network.np_sites")
        self.network_config()
        stage_count = len(self.network.stages)
        stages = [*(self.diagnostics.stages or []), self.diagnostics.sensitivity_stage]
        for stage in stages:
            if stage > stage_count:
                raise ValueError(f"diagnostics stage {stage} exceeds {stage_count} network stages")
        if self.network.input_size != self.dataset.image_size:
            raise ValueError(
                f"network.input_size {self.network.input_size} differs from "
                f"dataset.image_size {self.dataset.image_size}"
            )
        if self.training.frozen_stages > stage_count:
            raise ValueError(
                f"training.frozen_stages {self.training.frozen_stages} exceeds {stage_count} stages"
            )
        return self

    @property
    def dataset_seed(self) -> int:
        if self.dataset.seed is not None:
            return self.dataset.seed
        return derive_seed(self.seed, "dataset")

    @property
    def dataset_dir(self) -> Path:
        if self.dataset.directory is not None:
            return Path(self.dataset.directory)
        return Path(self.output_dir) / "dataset"

    def network_config(self) -> NetworkConfig:
        """The network layout with the np section's sites attached."""
        return NetworkConfig.model_validate(
            {
                **self.network.model_dump(),
                "np_sites": [s.model_dump() for s in self.np.resolved_sites()],
            }
        )

    def training_config(self) -> TrainConfig:
        """Training settings seeded from the top-level seed."""
        return self.training.model_copy(
            update={"seed": self.seed, "augment": self.training.augment or self.np.augment}
        )

    def with_overrides(
        self, seed: Optional[int] = None, output_dir: Optional[str] = None
    ) -> "ExperimentConfig":
        data = self.model_dump()
        if seed is not None:
            data["seed"] = seed
        if output_dir is not None:
            data["output_dir"] = output_dir
        return ExperimentConfig.model_validate(data)


def _format_errors(exc: ValidationError) -> list[str]:
    return [
        f"{'.'.join(str(part) for part in err['loc']) or '<root>'}: {err['msg']}"
        for err in exc.errors()
    ]


def parse_experiment_config(text: str, source: str = "<string>") -> ExperimentConfig:
    """Parse and validate a JSON experiment config.

    Raises:
        ConfigError: With line/column for JSON syntax errors and the dotted field
            path for schema errors.
    """
    try:
        data: Any = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(source, [f"line {exc.lineno}, column {exc.colno}: {exc.msg}"]) from exc
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(source, _format_errors(exc)) from exc


def load_experiment_config(path: Optional[str | Path] = None) -> ExperimentConfig:
    """Load a config file, or the bundled ``default.json`` when ``path`` is None.

    Raises:
        FileNotFoundError: If the file does not exist.
        ConfigError: If it is malformed.
    """
    config_path = Path(path) if path is not None else DEFAULT_CONFIG_PATH
    if not config_path.is_file():
        raise FileNotFoundError(f"config file not found: {config_path}")
    config = parse_experiment_config(config_path.read_text(encoding="utf-8"), str(config_path))
    logger.debug(f"Loaded experiment config from {config_path}")
    return config
