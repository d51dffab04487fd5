"""
Configuration management for the Skia front-end simulator.

Every field of SimConfig can be overridden via SKIA_-prefixed environment
variables. Run configs are JSON or YAML files keyed by field name.
"""

import json
import logging
import os
from enum import Enum
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, Optional, Union

import yaml
from pydantic import Field, ValidationError, field_validator
from pydantic_settings import BaseSettings

from src.core.errors import ConfigurationError
from src.isa.models import IsaKind
from src.shadow.models import LINE_SIZE, IndexPolicy

logger = logging.getLogger(__name__)


class SbdMode(str, Enum):
    """Which shadow regions the SBD decodes."""
    OFF = "off"
    HEAD = "head"
    TAIL = "tail"
    BOTH = "both"

    @property
    def decodes_head(self) -> bool:
        return self in (SbdMode.HEAD, SbdMode.BOTH)

    @property
    def decodes_tail(self) -> bool:
        return self in (SbdMode.TAIL, SbdMode.BOTH)


class DirectionPredictorKind(str, Enum):
    ORACLE = "oracle"
    GSHARE = "gshare"


class SimConfig(BaseSettings):
    """
    Simulator settings: structure geometry, pipeline timing and SBD policy.

    Defaults reproduce the reference front end (8K-entry BTB, 768-entry
    U-SBB, 2024-entry R-SBB, 24-entry FTQ, 12-wide decode).
    """

    # Run Configuration
    isa: IsaKind = Field(default=IsaKind.SVL, description="Instruction set of the code image")
    seed: int = Field(default=1, description="Seed for any randomized component of a run")
    log_level: str = Field(default="INFO", description="Logging level")
    progress_interval: int = Field(
        default=0,
        description="Log a progress line every N retired instructions (0 disables)"
    )

    # Predictor Geometry
    btb_entries: int = Field(default=8192, description="BTB entries (0 disables the BTB)")
    btb_unbounded: bool = Field(
        default=False,
        description="Model an infinite, fully associative BTB; btb_entries is ignored"
    )
    usbb_entries: int = Field(default=768, description="U-SBB entries (0 disables it)")
    rsbb_entries: int = Field(default=2024, description="R-SBB entries (0 disables it)")
    ways: int = Field(default=4, description="Associativity of the BTB, U-SBB and R-SBB")
    btb_tag_bits: int = Field(default=10, description="Partial tag width of BTB entries")
    sbb_tag_bits: int = Field(default=10, description="Partial tag width of SBB entries")
    ras_depth: int = Field(default=32, description="Return address stack depth")
    direction_predictor: DirectionPredictorKind = Field(
        default=DirectionPredictorKind.ORACLE,
        description="Conditional direction predictor"
    )
    gshare_history_bits: int = Field(default=12, description="Global history length for gshare")

    # L1-I Configuration
    l1i_size_bytes: int = Field(default=32768, description="L1-I capacity in bytes")
    l1i_ways: int = Field(default=8, description="L1-I associativity")
    l1i_miss_latency: int = Field(default=30, description="Cycles from L1-I miss to fill")

    # Pipeline Timing
    ftq_entries: int = Field(default=24, description="Fetch target queue entries (basic blocks)")
    max_block_instructions: int = Field(default=16, description="Instruction cap of one FTQ entry")
    decode_width: int = Field(default=12, description="Instructions decoded per cycle")
    decode_queue_entries: int = Field(default=64, description="Fetched instructions buffered ahead of decode")
    fetch_to_decode_depth: int = Field(default=3, description="Stages between fetch and decode")
    decode_resteer_repair: int = Field(default=2, description="Cycles to repair the IAG after a decode resteer")
    execute_resteer_penalty: int = Field(default=12, description="Extra cycles until an execute-stage resteer")
    max_cycles_per_record: int = Field(
        default=10000,
        description="Cycles without retirement before the run is declared stuck"
    )

    # Shadow Branch Decoding
    sbd_mode: SbdMode = Field(default=SbdMode.BOTH, description="Shadow regions to decode")
    sbd_delay: int = Field(default=4, description="Cycles from line residency to SBB insertion")
    index_policy: IndexPolicy = Field(default=IndexPolicy.FIRST, description="Head start index policy")
    max_valid_paths: int = Field(default=6, description="Head lines with more valid starts are discarded")
    invalidate_on_bogus: bool = Field(
        default=False,
        description="Invalidate SBB entries whose supplied target proves wrong"
    )

    @field_validator('log_level')
    @classmethod
    def validate_log_level(cls, v):
        """Validate logging level."""
        allowed_levels = ['DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL']
        if v.upper() not in allowed_levels:
            raise ValueError(f'Log level must be one of: {allowed_levels}')
        return v.upper()

    @field_validator('btb_entries', 'usbb_entries', 'rsbb_entries', 'progress_interval')
    @classmethod
    def validate_non_negative(cls, v):
        if v < 0:
            raise ValueError('Must be zero or positive')
        return v

    @field_validator(
        'ways', 'ras_depth', 'l1i_size_bytes', 'l1i_ways', 'l1i_miss_latency',
        'ftq_entries', 'max_block_instructions', 'decode_width', 'decode_queue_entries',
        'fetch_to_decode_depth', 'decode_resteer_repair', 'execute_resteer_penalty',
        'sbd_delay', 'max_valid_paths', 'max_cycles_per_record',
    )
    @classmethod
    def validate_positive(cls, v):
        """Latencies, widths and sizes are all at least 1."""
        if v < 1:
            raise ValueError('Must be at least 1')
        return v

    @field_validator('btb_tag_bits', 'sbb_tag_bits')
    @classmethod
    def validate_tag_bits(cls, v):
        if not 1 <= v <= 32:
            raise ValueError('Tag width must be between 1 and 32 bits')
        return v

    @field_validator('gshare_history_bits')
    @classmethod
    def validate_history_bits(cls, v):
        if not 1 <= v <= 24:
            raise ValueError('gshare history must be between 1 and 24 bits')
        return v

    @property
    def l1i_sets(self) -> int:
        return self.l1i_size_bytes // LINE_SIZE // self.l1i_ways

    model_config = {
        "env_file": ".env",
        "env_file_encoding": "utf-8",
        "case_sensitive": False,
        "env_prefix": "SKIA_",
        "extra": "ignore"
    }


@lru_cache()
def get_settings() -> SimConfig:
    """
    Get cached settings built from defaults and the environment only.
    """
    return SimConfig()


def validate_sim_config(config: SimConfig) -> None:
    """
    Cross-field geometry checks that single-field validators cannot express.

    Raises:
        ConfigurationError: Listing every problem found
    """
    errors = []

    for name in ("btb_entries", "usbb_entries", "rsbb_entries"):
        entries = getattr(config, name)
        if entries % config.ways:
            errors.append(f"{name}={entries} is not divisible by ways={config.ways}")

    if config.decode_queue_entries < config.max_block_instructions:
        errors.append(
            f"decode_queue_entries={config.decode_queue_entries} cannot hold a block of "
            f"{config.max_block_instructions} instructions"
        )

    if config.l1i_size_bytes % LINE_SIZE:
        errors.append(f"l1i_size_bytes={config.l1i_size_bytes} is not a multiple of {LINE_SIZE}")
    elif (config.l1i_size_bytes // LINE_SIZE) % config.l1i_ways:
        errors.append(
            f"L1-I of {config.l1i_size_bytes} bytes cannot be split into {config.l1i_ways} ways"
        )

    if errors:
        raise ConfigurationError(f"Invalid simulator configuration: {'; '.join(errors)}")


def _read_config_file(path: Path) -> Dict[str, Any]:
    if not path.exists():
        raise ConfigurationError(f"Config file not found: {path}")
    try:
        text = path.read_text(encoding="utf-8")
        if path.suffix.lower() in (".yaml", ".yml"):
            data = yaml.safe_load(text) or {}
        else:
            data = json.loads(text)
    except (OSError, json.JSONDecodeError, yaml.YAMLError) as e:
        raise ConfigurationError(f"Could not parse config file {path}: {e}") from e
    if not isinstance(data, dict):
        raise ConfigurationError(f"Config file {path} must contain an object of settings")
    return data


def load_sim_config(path: Optional[Union[str, Path]] = None, **overrides: Any) -> SimConfig:
    """
    Build a validated SimConfig.

    Precedence, highest first: explicit overrides, SKIA_* environment
    variables, the config file, field defaults. Overrides whose value is None
    are ignored so CLI flags can be passed through unconditionally.

    Args:
        path: Optional JSON or YAML config file
        **overrides: Field values that win over every other source

    Returns:
        Validated configuration

    Raises:
        ConfigurationError: On unreadable files, invalid values or geometry
    """
    data: Dict[str, Any] = {}
    if path is not None:
        data = _read_config_file(Path(path))
        env_keys = {key.upper() for key in os.environ}
        shadowed = [key for key in data if f"SKIA_{key}".upper() in env_keys]
        for key in shadowed:
            logger.debug(f"Environment overrides config file value for {key}")
            data.pop(key)

    data.update({key: value for key, value in overrides.items() if value is not None})

    try:
        config = SimConfig(**data)
    except ValidationError as e:
        raise ConfigurationError(f"Invalid simulator configuration: {e}") from e

    validate_sim_config(config)
    return config
