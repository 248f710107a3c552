"""Toolkit configuration settings.

Values come from code defaults, then ``STOCHRK_*`` environment variables or a
``.env`` file. Command-line flags override both.
"""

from pathlib import Path
from typing import Optional

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    model_config = SettingsConfigDict(
        env_prefix="STOCHRK_",
        env_file=".env",
        extra="ignore",
        frozen=True,
    )

    # Logging
    log_level: str = "INFO"
    log_json: bool = False

    # Code generation
    max_noise_dim: int = Field(6, ge=1)
    default_dialect: str = "python"
    float_digits: Optional[int] = Field(None, ge=1, le=17)
    extra_tables_dir: Optional[Path] = None

    # Monte Carlo
    default_workers: int = Field(1, ge=1)
    default_batch_size: int = Field(1, ge=1)

    # Iterated integrals: fixed truncation length, None -> ceil(1/h) rule
    series_terms: Optional[int] = Field(None, ge=1)

    # Convergence fits below this error level are flagged degenerate
    degenerate_error: float = Field(1e-10, gt=0)


settings = Settings()
