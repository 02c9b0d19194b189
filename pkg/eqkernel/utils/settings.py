"""
eqkernel.utils.settings

Runtime settings. Values come from the environment (prefix EQK_) or a local
.env file, e.g. EQK_LOG_LEVEL=DEBUG or EQK_APP_THREADS=4.
"""

from __future__ import annotations

import logging
from pathlib import Path

from pydantic import Field, computed_field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from .. import __version__
from .utils import find_project_root

logger = logging.getLogger("eqkernel.settings")

PACKAGE_DIR = Path(__file__).resolve().parents[1]


class Settings(BaseSettings):
    model_config = SettingsConfigDict(env_prefix="EQK_", env_file=".env", extra="ignore")

    # APP
    app_title: str = "eqkernel"
    app_description: str = "Kernels approximated as embedding quantum kernels: RFF, QRFF, projected and Mercer pipelines"
    app_version: str = __version__

    # CLI DEFAULTS (picked up by build_parser as app_<flag>)
    app_threads: int = Field(default=1, ge=1)
    app_keyword: str | None = None

    # DEV WORKSPACE
    debug: bool = False
    log_level: str = "INFO"
    write_wall_time: bool = True

    # DIR PATHS
    root_dir: Path = Field(default_factory=find_project_root)

    @field_validator("log_level")
    @classmethod
    def _upper(cls, value: str) -> str:
        value = value.upper()
        if value not in logging.getLevelNamesMapping():
            raise ValueError(f"Unknown log level {value!r}.")
        return value

    @computed_field
    @property
    def cli_path(self) -> Path:
        return PACKAGE_DIR / "config" / "cli.yaml"

    @computed_field
    @property
    def experiments_dir(self) -> Path:
        return PACKAGE_DIR / "config" / "experiments"

    @property
    def root_path(self) -> str:
        return str(self.root_dir)


settings = Settings()
