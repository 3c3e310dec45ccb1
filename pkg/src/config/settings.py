"""Application settings and configuration management"""
from pathlib import Path
from typing import Optional

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Application settings with environment variable support (prefix FAAE_)"""

    model_config = SettingsConfigDict(
        env_prefix="FAAE_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # Logging Configuration
    log_level: str = Field("INFO", description="Logging level")
    enable_file_logging: bool = Field(False, description="Enable file logging")
    log_directory: Path = Field(Path("logs"), description="Directory for log files")

    # Output Configuration
    output_directory: Path = Field(
        Path("runs"), description="Default directory for training outputs"
    )
    checkpoint_filename: str = Field(
        "checkpoint.faae", description="Checkpoint file name inside a run directory"
    )
    metrics_filename: str = Field(
        "metrics.csv", description="Per-step metrics file name"
    )
    epoch_metrics_filename: str = Field(
        "epochs.csv", description="Per-epoch metrics file name"
    )
    panel_pad: int = Field(2, description="White padding between panel images")

    # Verification Configuration
    gradcheck_instances: int = Field(
        100, description="Randomized instances per op in the gradient suite"
    )
    gradcheck_eps: float = Field(1e-4, description="Finite-difference step")
    gradcheck_tolerance: float = Field(
        1e-4, description="Maximum accepted relative gradient error"
    )

    # Evaluation Configuration
    eval_count: int = Field(1000, description="Samples drawn by evaluate")

    # Development Configuration
    debug_mode: bool = Field(False, description="Enable debug mode")

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        valid_levels = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]
        if v.upper() not in valid_levels:
            raise ValueError(f"log_level must be one of {valid_levels}")
        return v.upper()

    @field_validator("gradcheck_instances", "eval_count")
    @classmethod
    def validate_positive(cls, v: int) -> int:
        if v <= 0:
            raise ValueError("must be a positive integer")
        return v

    @field_validator("gradcheck_eps", "gradcheck_tolerance")
    @classmethod
    def validate_positive_real(cls, v: float) -> float:
        if v <= 0:
            raise ValueError("must be strictly positive")
        return v


# Global settings instance
_settings: Optional[Settings] = None


def get_settings() -> Settings:
    """Get the global settings instance"""
    global _settings
    if _settings is None:
        _settings = Settings()
    return _settings

