from functools import lru_cache
from pathlib import Path

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict

# Data files shipped inside the package config directory
_CONFIG_DIR = Path(__file__).parent


class Settings(BaseSettings):
    model_config = SettingsConfigDict(env_prefix="UED_TOMOGRAPHY_")

    output_root: Path = Field(default=Path("./runs"), description="parent of per-run artifact directories")
    form_factor_table: Path = Field(
        default=_CONFIG_DIR / "form_factors.yaml", description="YAML table of atomic form-factor coefficients"
    )
    log_json: bool = Field(default=True, description="JSON log lines on stderr; false for console output")
    log_level: str = Field(default="INFO", description="root log level")


@lru_cache
def get_settings() -> Settings:
    return Settings()


def environment_help() -> str:
    """One line per setting with its environment variable and default."""
    prefix = Settings.model_config["env_prefix"]
    lines = ["environment variables:"]
    for name, field in Settings.model_fields.items():
        lines.append(f"  {prefix}{name.upper():<20s} {field.description} (default: {field.default})")
    return "\n".join(lines)
