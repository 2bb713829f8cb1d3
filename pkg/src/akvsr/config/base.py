"""Environment-level settings shared by every akvsr command."""

from typing import Optional

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class AkvsrSettings(BaseSettings):  # type: ignore[misc]
    """Process settings read from ``AKVSR_*`` environment variables."""

    model_config = SettingsConfigDict(
        env_prefix="AKVSR_",
        env_file=".env",
        case_sensitive=False,
    )

    seed: Optional[int] = Field(
        default=None,
        ge=0,
        description="Overrides the run config seed when set",
    )
    log_level: str = Field(default="INFO", description="Logging level")
    workers: int = Field(
        default=1,
        ge=1,
        le=64,
        description="Worker processes for ablation sweeps",
    )
