"""
Parameter sweeps: one simulation per value of a single axis.
"""

import logging
from multiprocessing import Pool
from pathlib import Path
from typing import Any, Dict, List, Sequence, Tuple

from src.core.config import SimConfig, validate_sim_config
from src.core.errors import ConfigurationError
from src.frontend.metrics import MetricsReport, compute_metrics
from src.frontend.simulator import run_simulation
from src.memory.code_image import CodeImage
from src.predictors.models import rsbb_layout, usbb_layout
from src.trace.format import read_trace

logger = logging.getLogger(__name__)

ENTRY_AXES = ("usbb_entries", "rsbb_entries", "btb_entries")
SBB_AXES = ("sbb_split", "sbb_scale")
SWEEP_AXES = ENTRY_AXES + SBB_AXES


def _round_to_ways(entries: float, ways: int) -> int:
    entries = int(entries)
    return entries - entries % ways


def sweep_point(config: SimConfig, axis: str, value: float) -> SimConfig:
    """
    Configuration for one sweep value.

    sbb_split gives the U-SBB that fraction of the current combined SBB bit
    budget and the R-SBB the rest. sbb_scale multiplies both SBB sizes.

    Raises:
        ConfigurationError: For unknown axes or values that break the geometry
    """
    if axis in ENTRY_AXES:
        if value != int(value) or value < 0:
            raise ConfigurationError(f"{axis} values must be whole entry counts, got {value}")
        update: Dict[str, Any] = {axis: int(value)}
    elif axis == "sbb_split":
        if not 0.0 <= value <= 1.0:
            raise ConfigurationError(f"sbb_split values must lie in [0, 1], got {value}")
        u_bits = usbb_layout(config.sbb_tag_bits).total_bits
        r_bits = rsbb_layout(config.sbb_tag_bits).total_bits
        budget = config.usbb_entries * u_bits + config.rsbb_entries * r_bits
        usbb = _round_to_ways(budget * value / u_bits, config.ways)
        rsbb = _round_to_ways((budget - usbb * u_bits) / r_bits, config.ways)
        update = {"usbb_entries": usbb, "rsbb_entries": rsbb}
    elif axis == "sbb_scale":
        if value < 0:
            raise ConfigurationError(f"sbb_scale values must be non-negative, got {value}")
        update = {
            "usbb_entries": _round_to_ways(config.usbb_entries * value, config.ways),
            "rsbb_entries": _round_to_ways(config.rsbb_entries * value, config.ways),
        }
    else:
        raise ConfigurationError(f"Unknown sweep axis '{axis}', expected one of {list(SWEEP_AXES)}")

    point = SimConfig(**{**config.model_dump(), **update})
    validate_sim_config(point)
    return point


def _label(axis: str, value: float) -> str:
    return f"{axis}={int(value) if value == int(value) else value}"


def _run_point(args: Tuple[str, str, Dict[str, Any], str]) -> Dict[str, Any]:
    """Worker entry point; loads its own inputs so nothing large is pickled."""
    image_path, trace_path, config_data, label = args
    config = SimConfig(**config_data)
    image = CodeImage.load(image_path)
    records = read_trace(trace_path)
    stats = run_simulation(image, records, config)
    return compute_metrics(stats, label, config).model_dump(mode="json")


def run_sweep(image_path: Path, trace_path: Path, config: SimConfig, axis: str,
              values: Sequence[float], jobs: int = 1) -> List[MetricsReport]:
    """
    Simulate every value of one axis. Rows come back in the order of values
    regardless of which worker finishes first.

    Raises:
        ConfigurationError: If values is empty or a value is invalid
    """
    if not values:
        raise ConfigurationError("Sweep needs at least one value")
    points = [(_label(axis, v), sweep_point(config, axis, v)) for v in values]
    tasks = [(str(image_path), str(trace_path), point.model_dump(mode="json"), label) for label, point in points]

    if jobs > 1 and len(tasks) > 1:
        logger.info(f"Running {len(tasks)} sweep points on {jobs} worker processes")
        with Pool(min(jobs, len(tasks))) as pool:
            results = pool.map(_run_point, tasks)
    else:
        image = CodeImage.load(image_path)
        records = read_trace(trace_path)
        results = []
        for label, point in points:
            logger.info(f"Sweep point {label}")
            stats = run_simulation(image, records, point)
            results.append(compute_metrics(stats, label, point).model_dump(mode="json"))

    return [MetricsReport.model_validate(result) for result in results]
