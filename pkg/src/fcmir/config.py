"""Configuration: a TOML file, environment overrides and CLI flag overrides.

Precedence (lowest first): dataclass defaults, TOML file, environment, flags.
Secrets are only accepted from the environment.

Example file::

    [sampling]
    interval_s = 0.5
    comparator = "phash_ssim"

    [endpoint]
    base_url = "https://example.invalid/v1"
    model = "vision-model"

    [paths]
    template_dir = "prompts/"
"""

import hashlib
import json
import logging
import os
import tomllib
from collections.abc import Mapping
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

from .errors import ConfigError
from .models import (
    EndpointConfig,
    FormatRewardParams,
    RewardWeights,
    SamplingParams,
    SsimParams,
    StitchParams,
)

logger = logging.getLogger(__name__)

ENV_OVERRIDES = {
    "FCMIR_API_BASE": ("endpoint", "base_url"),
    "FCMIR_API_KEY": ("endpoint", "api_key"),
    "FCMIR_MODEL": ("endpoint", "model"),
    "FCMIR_DECODER_CMD": ("ingest", "decoder_cmd"),
}
SECRET_KEYS = {("endpoint", "api_key")}


@dataclass
class IngestSettings:
    """How sources are read: ``frame_dir`` or ``video_file`` through ``decoder_cmd``."""

    kind: str = "frame_dir"
    decoder_cmd: str = ""

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


@dataclass
class PathSettings:
    """Output root and an optional prompt-template override directory."""

    output_dir: str = "fcmir-out"
    template_dir: str = ""

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


SECTIONS: dict[str, type] = {
    "sampling": SamplingParams,
    "ssim": SsimParams,
    "stitch": StitchParams,
    "endpoint": EndpointConfig,
    "reward": RewardWeights,
    "format_reward": FormatRewardParams,
    "ingest": IngestSettings,
    "paths": PathSettings,
}


@dataclass
class EffectiveConfig:
    """The fully resolved configuration of one run."""

    sampling: SamplingParams = field(default_factory=SamplingParams)
    ssim: SsimParams = field(default_factory=SsimParams)
    stitch: StitchParams = field(default_factory=StitchParams)
    endpoint: EndpointConfig = field(default_factory=EndpointConfig)
    reward: RewardWeights = field(default_factory=RewardWeights)
    format_reward: FormatRewardParams = field(default_factory=FormatRewardParams)
    ingest: IngestSettings = field(default_factory=IngestSettings)
    paths: PathSettings = field(default_factory=PathSettings)

    def to_dict(self) -> dict[str, Any]:
        """All sections; the API key is redacted."""
        return {name: getattr(self, name).to_dict() for name in SECTIONS}

    def digests(self) -> dict[str, str]:
        """sha256 of each section's canonical JSON form."""
        return {name: _digest(section) for name, section in self.to_dict().items()}


def _digest(data: Any) -> str:
    canonical = json.dumps(data, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _read_toml(path: Path) -> dict[str, Any]:
    try:
        with open(path, "rb") as f:
            return tomllib.load(f)
    except FileNotFoundError as e:
        raise ConfigError(f"Config file not found: {path}") from e
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"{path}: {e}") from e


def _check_keys(section: str, values: Mapping[str, Any], source: str) -> None:
    if section not in SECTIONS:
        raise ConfigError(f"{source}: unknown section [{section}], expected {sorted(SECTIONS)}")
    if not isinstance(values, Mapping):
        raise ConfigError(f"{source}: [{section}] must be a table")
    known = {f.name for f in fields(SECTIONS[section])}
    unknown = sorted(set(values) - known)
    if unknown:
        raise ConfigError(f"{source}: unknown key(s) in [{section}]: {', '.join(unknown)}")


def load_config(
    path: str | Path | None = None,
    env: Mapping[str, str] | None = None,
    overrides: Mapping[str, Mapping[str, Any]] | None = None,
) -> EffectiveConfig:
    """Resolve the effective configuration.

    Args:
        path: Optional TOML file
        env: Environment mapping (defaults to ``os.environ``)
        overrides: Section → key → value, typically from CLI flags; None values are ignored

    Raises:
        ConfigError: Unreadable file, unknown section or key, a secret in the file,
            or a value rejected by the section's validation
    """
    env = os.environ if env is None else env
    merged: dict[str, dict[str, Any]] = {name: {} for name in SECTIONS}

    if path is not None:
        data = _read_toml(Path(path))
        for section, values in data.items():
            _check_keys(section, values, str(path))
            for key in values:
                if (section, key) in SECRET_KEYS:
                    raise ConfigError(
                        f"{path}: [{section}] {key} must not be stored in the config file; "
                        "set FCMIR_API_KEY instead"
                    )
            merged[section].update(values)
        logger.info(f"Loaded config from {path}")

    for var, (section, key) in ENV_OVERRIDES.items():
        if env.get(var):
            merged[section][key] = env[var]

    for section, values in (overrides or {}).items():
        _check_keys(section, values, "override")
        merged[section].update({k: v for k, v in values.items() if v is not None})

    sections = {}
    for name, cls in SECTIONS.items():
        try:
            sections[name] = cls(**merged[name])
        except (TypeError, ValueError) as e:
            raise ConfigError(f"Invalid [{name}] configuration: {e}") from e
    return EffectiveConfig(**sections)
