from functools import lru_cache

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    environment: str = "development"
    debug: bool = False
    log_level: str = "INFO"
    sentry_dsn: str = ""

    # Numerical tolerances
    rank_epsilon: float = Field(default=1e-9, gt=0.0, lt=1.0)
    residual_tolerance: float = Field(default=1e-8, gt=0.0, lt=1.0)

    # Generic-coefficient sampling
    retry_budget: int = Field(default=20, ge=1)
    candidate_draws: int = Field(default=16, ge=1)

    # Symbol extension search
    extension_max: int = Field(default=12, ge=1)
    max_system_columns: int = Field(default=4000, ge=1)
    extension_trials: int = Field(default=8, ge=1)
    trial_seed: int = Field(default=24301, ge=0)

    # Rate model
    noise_power: float = Field(default=1.0, gt=0.0)

    # Parallelism cap for sweeps and batches (RELAY_DOF_THREADS)
    threads: int = Field(default=1, ge=1)

    model_config = SettingsConfigDict(
        env_prefix="RELAY_DOF_",
        env_file=".env",
        extra="ignore",
    )


@lru_cache()
def get_settings() -> Settings:
    """
    Get cached settings instance.
    """
    return Settings()
