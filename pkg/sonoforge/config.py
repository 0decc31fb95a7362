import logging
from functools import lru_cache
from typing import List

from pydantic import field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

logger = logging.getLogger(__name__)

KNOWN_LOG_LEVELS = {"CRITICAL", "ERROR", "WARNING", "INFO", "DEBUG"}


class Settings(BaseSettings):
    APP_NAME: str = "Sonoforge API"
    ENV: str = "local"
    DEBUG: bool = False
    LOG_LEVEL: str = "INFO"

    WORKERS: int = 1
    WORKING_RATE: int = 32000
    OUTPUT_DIR: str = "out"

    MAX_UPLOAD_BYTES: int = 20_000_000

    CORS_ORIGINS: List[str] = []

    @field_validator("CORS_ORIGINS", mode="before")
    @classmethod
    def parse_cors(cls, v):
        if not v or isinstance(v, list):
            return v or []
        return [i.strip() for i in v.split(",") if i.strip()]

    @field_validator("WORKERS")
    @classmethod
    def validate_workers(cls, v):
        if v < 1:
            logger.warning(f"WORKERS={v} is not a valid pool size, using 1")
            return 1
        return v

    @field_validator("LOG_LEVEL")
    @classmethod
    def validate_log_level(cls, v):
        level = v.upper()
        if level not in KNOWN_LOG_LEVELS:
            raise ValueError(f"Unknown log level: {v}")
        return level

    @field_validator("WORKING_RATE")
    @classmethod
    def validate_working_rate(cls, v):
        if v <= 0:
            raise ValueError("WORKING_RATE must be positive")
        return v

    model_config = SettingsConfigDict(
        env_prefix="SONOFORGE_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )


@lru_cache
def get_settings() -> Settings:
    return Settings()


settings = get_settings()
