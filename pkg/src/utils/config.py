from enum import Enum
from pathlib import Path
from typing import Any, Dict, Optional
import logging
import os

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from src.models.records import Authenticity
from src.utils.errors import ConfigError

logger = logging.getLogger("Config")

DEFAULT_CONFIG_PATH = Path("config/config.yaml")


class AuthenticityPolicy(str, Enum):
    KEEP_ALL = "KEEP_ALL"
    DROP_FALSE = "DROP_FALSE"
    DROP_FALSE_AND_SUSPICIOUS = "DROP_FALSE_AND_SUSPICIOUS"

    def keeps(self, authenticity: Authenticity) -> bool:
        if self is AuthenticityPolicy.KEEP_ALL:
            return True
        if self is AuthenticityPolicy.DROP_FALSE:
            return authenticity is not Authenticity.FALSE
        return authenticity is Authenticity.GENUINE


def load_settings(path: Optional[str] = None) -> Dict[str, Any]:
    """
    Read the YAML settings file.

    An explicit path (argument or FORGE_CONFIG) must exist; the default
    config/config.yaml is optional.
    """
    explicit = path or os.getenv("FORGE_CONFIG")
    config_path = Path(explicit) if explicit else DEFAULT_CONFIG_PATH
    if not config_path.exists():
        if explicit:
            raise ConfigError(f"Configuration file not found: {config_path}")
        logger.debug(f"No {config_path}; using built-in defaults")
        return {}

    try:
        with config_path.open(encoding="utf-8") as f:
            settings = yaml.safe_load(f) or {}
    except (OSError, yaml.YAMLError) as e:
        raise ConfigError(f"Cannot read configuration {config_path}: {e}")
    if not isinstance(settings, dict):
        raise ConfigError(f"{config_path}: top level must be a mapping")
    return settings


def settings_to_fields(settings: Dict[str, Any]) -> Dict[str, Any]:
    """Flatten the YAML sections into PipelineConfig field names."""
    paths = settings.get("paths") or {}
    run = settings.get("run") or {}
    fields: Dict[str, Any] = {
        "gazetteer_dir": paths.get("gazetteers"),
        "mappings": paths.get("mappings"),
        "lexicon": paths.get("lexicon"),
        "modifiers": paths.get("modifiers"),
        "report": paths.get("report"),
        "policy": run.get("policy"),
        "workers": run.get("workers"),
        "delimiter": run.get("delimiter"),
        "gazetteers": settings.get("gazetteers"),
        "ceilings": (settings.get("categories") or {}).get("ceilings"),
        "log_file": (settings.get("logging") or {}).get("file"),
    }
    return {k: v for k, v in fields.items() if v is not None}


class PipelineConfig(BaseModel):
    """Everything one dataset run needs; every referenced path must exist"""

    model_config = ConfigDict(frozen=True)

    input: Path
    output: Path
    gazetteer_dir: Path
    mappings: Path
    lexicon: Path
    modifiers: Path
    policy: AuthenticityPolicy = AuthenticityPolicy.KEEP_ALL
    report: Optional[Path] = None
    workers: int = Field(default=1, ge=1)
    delimiter: str = "auto"
    gazetteers: Dict[str, Dict[str, Any]] = Field(default_factory=dict)
    ceilings: Optional[Dict[str, int]] = None
    log_file: Optional[Path] = None

    @field_validator("policy", mode="before")
    @classmethod
    def _upper_policy(cls, value):
        return value.strip().upper() if isinstance(value, str) else value

    @model_validator(mode="after")
    def _check_paths(self):
        missing = [
            f"{name}: {path}"
            for name, path in (
                ("input", self.input),
                ("mappings", self.mappings),
                ("lexicon", self.lexicon),
                ("modifiers", self.modifiers),
            )
            if not path.is_file()
        ]
        if not self.gazetteer_dir.is_dir():
            missing.append(f"gazetteer_dir: {self.gazetteer_dir}")
        else:
            for kind, spec in self.gazetteers.items():
                file = (spec or {}).get("file")
                if not file:
                    missing.append(f"gazetteers.{kind}: no file configured")
                elif not (self.gazetteer_dir / file).is_file():
                    missing.append(f"gazetteers.{kind}: {self.gazetteer_dir / file}")
        if missing:
            raise ValueError("missing paths: " + "; ".join(missing))
        return self

    @classmethod
    def build(cls, settings: Dict[str, Any], overrides: Dict[str, Any]) -> "PipelineConfig":
        """Merge YAML settings with command-line overrides (None means not given)."""
        fields = settings_to_fields(settings)
        fields.update({k: v for k, v in overrides.items() if v is not None})
        try:
            return cls(**fields)
        except ValidationError as e:
            raise ConfigError(f"Invalid configuration: {e}")
