"""
Core services shared by every simulator package: configuration, the error
hierarchy and logging setup.
"""

from .errors import (
    ConfigurationError,
    InputError,
    SimulationError,
    SkiaError,
)
from .config import (
    DirectionPredictorKind,
    SbdMode,
    SimConfig,
    get_settings,
    load_sim_config,
    validate_sim_config,
)
from .logging_setup import configure_logging

__all__ = [
    "ConfigurationError",
    "InputError",
    "SimulationError",
    "SkiaError",
    "DirectionPredictorKind",
    "SbdMode",
    "SimConfig",
    "get_settings",
    "load_sim_config",
    "validate_sim_config",
    "configure_logging",
]
