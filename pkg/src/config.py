"""Runtime settings using pydantic-settings."""

import os
from pathlib import Path
from typing import Literal

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Process-level settings loaded from ``NORMPERTURB_*`` environment variables.

    Experiment parameters live in the JSON experiment config, not here.
    """

    model_config = SettingsConfigDict(
        env_prefix="NORMPERTURB_",
        env_file=None,
        case_sensitive=False,
    )

    # Logging
    log_level: Literal["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"] = Field(
        default="INFO", description="Logging level"
    )

    # Tensor engine
    anomaly_detection: bool = Field(
        default=True, description="Raise on NaN/Inf after every tensor operation"
    )

    # Sweeps
    jobs: int = Field(default=1, ge=1, le=256, description="Default sweep worker processes")


def load_settings() -> Settings:
    """Load and validate runtime settings.

    Raises:
        ValidationError: If a variable holds an invalid value.
    """
    if not os.getenv("PYTEST_CURRENT_TEST"):
        _load_dotenv()
    return Settings()


def _load_dotenv() -> None:
    dotenv_path = Path(".env")
    if not dotenv_path.exists():
        return

    for line in dotenv_path.read_text().splitlines():
        stripped = line.strip()
        if not stripped or stripped.startswith("#") or "=" not in stripped:
            continue
        key, value = stripped.split("=", 1)
        key = key.strip()
        if not key.upper().startswith("NORMPERTURB_"):
            continue
        value = value.strip().strip("'").strip('"')
        os.environ.setdefault(key, value)
