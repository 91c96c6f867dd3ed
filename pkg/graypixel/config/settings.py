from pathlib import Path
from typing import Optional

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Process-wide settings read from GRAYPIXEL_* environment variables or a .env file."""

    model_config = SettingsConfigDict(
        env_prefix="GRAYPIXEL_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    # === Data ===
    data: Optional[Path] = Field(None, description="Root for relative manifest image paths")

    # === Logging ===
    log_level: str = Field("INFO", description="Root logging level")

    # === Batch ===
    jobs: int = Field(1, ge=1, description="Default worker count for batch commands")
    report_format: str = Field("csv", pattern="^(csv|json)$", description="Default report format")

    # === Decoding ===
    saturation_margin: float = Field(
        0.98, gt=0.0, le=1.0,
        description="Fraction of the black-subtracted saturation range at which a pixel is treated as clipped",
    )

    # === Ranking ===
    rank_decimals: int = Field(
        10, ge=1, le=15,
        description="Decimal places grayness values are rounded to before ranking",
    )


settings = Settings()
