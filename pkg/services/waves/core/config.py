"""
Process-level settings for the wave solver.

Run-level numerical parameters live in ``services.waves.schemas.config``;
this module only carries what the environment decides (logging, worker
pool size, default output location).
"""
from functools import lru_cache
from typing import Optional

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    PROJECT_NAME: str = "Capillary Waves BIM"

    # Logging
    LOG_LEVEL: str = "INFO"
    LOG_FILE: Optional[str] = None
    LOG_MAX_BYTES: int = 10 * 1024 * 1024  # 10MB
    LOG_BACKUP_COUNT: int = 5

    # Worker pool used by verify suites and estimate ensembles
    MAX_WORKERS: int = 4

    # Output
    DEFAULT_OUTPUT_DIR: str = "out"

    model_config = SettingsConfigDict(
        case_sensitive=True,
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )


@lru_cache()
def get_settings() -> Settings:
    """Get process settings."""
    return Settings()
