"""
Derived metrics (MPKI, reductions between paired runs) and report files.
"""

import json
import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import pandas as pd
from pydantic import BaseModel, Field

from src.core.config import SimConfig
from src.frontend.models import Stats

logger = logging.getLogger(__name__)

CSV_COLUMNS = [
    "label",
    "isa",
    "sbd_mode",
    "btb_entries",
    "btb_unbounded",
    "usbb_entries",
    "rsbb_entries",
    "seed",
    "retired",
    "cycles",
    "ipc",
    "btb_misses",
    "btb_miss_mpki",
    "btb_miss_l1_resident_mpki",
    "btb_miss_l1_nonresident_mpki",
    "l1_resident_share",
    "sbb_covered_misses",
    "sbb_insertions",
    "sbb_insertions_head",
    "sbb_insertions_tail",
    "sbb_hits",
    "sbb_hits_committed",
    "bogus_supplied_targets",
    "bogus_insertions",
    "decode_resteers",
    "execute_resteers",
    "decoder_idle_cycles",
    "l1i_demand_misses",
    "l1i_prefetch_misses",
    "l1i_wrong_path_misses",
    "l1i_miss_mpki",
    "l1i_demand_miss_mpki",
    "l1i_prefetch_miss_mpki",
    "l1i_wrong_path_miss_mpki",
]


MPKI_FAMILIES = (
    "btb_miss_mpki",
    "btb_miss_l1_resident_mpki",
    "btb_miss_l1_nonresident_mpki",
    "decode_resteer_mpki",
    "execute_resteer_mpki",
    "l1i_miss_mpki",
    "l1i_demand_miss_mpki",
    "l1i_prefetch_miss_mpki",
    "l1i_wrong_path_miss_mpki",
)


class MetricsReport(BaseModel):
    """Per-run metrics plus the raw counters they came from."""
    label: str = ""
    isa: str = ""
    sbd_mode: str = ""
    btb_entries: int = 0
    btb_unbounded: bool = False
    usbb_entries: int = 0
    rsbb_entries: int = 0
    seed: int = 0
    retired: int
    cycles: int
    ipc: float
    btb_misses: int
    btb_miss_mpki: float
    btb_miss_l1_resident_mpki: float
    btb_miss_l1_nonresident_mpki: float
    l1_resident_share: float
    mpki_by_class: Dict[str, float] = Field(default_factory=dict)
    mpki_by_region: Dict[str, float] = Field(default_factory=dict)
    decode_resteer_mpki: float
    execute_resteer_mpki: float
    sbb_covered_misses: int
    sbb_insertions: int
    sbb_insertions_head: int
    sbb_insertions_tail: int
    sbb_hits: int
    sbb_hits_committed: int
    bogus_supplied_targets: int
    bogus_insertions: int
    decode_resteers: int
    execute_resteers: int
    decoder_idle_cycles: int
    l1i_demand_misses: int
    l1i_prefetch_misses: int
    l1i_wrong_path_misses: int
    l1i_miss_mpki: float
    l1i_demand_miss_mpki: float
    l1i_prefetch_miss_mpki: float
    l1i_wrong_path_miss_mpki: float
    stats: Stats


class RunComparison(BaseModel):
    """Percentage reductions of a run relative to a baseline run."""
    baseline: str
    candidate: str
    btb_miss_mpki_reduction_pct: float
    decoder_idle_cycle_reduction_pct: float
    decode_resteer_reduction_pct: float
    execute_resteer_reduction_pct: float
    cycle_reduction_pct: float
    mpki_reduction_pct: Dict[str, float] = Field(
        default_factory=dict,
        description="Reduction of every MPKI family, keyed by report field"
    )


def mpki(count: int, retired: int) -> float:
    """Events per thousand committed instructions."""
    return count * 1000.0 / retired


def percent_reduction(before: float, after: float) -> float:
    """Reduction from before to after in percent; 0 when before is 0."""
    if before == 0:
        return 0.0
    return (before - after) * 100.0 / before


def compute_metrics(stats: Stats, label: str = "", config: Optional[SimConfig] = None) -> MetricsReport:
    """
    Derive MPKIs and shares from a run's counters.

    Raises:
        ValueError: If the run retired no instructions
    """
    if stats.retired <= 0:
        raise ValueError("Metrics need at least one retired instruction")
    retired = stats.retired
    l1i_misses = stats.l1i_demand_misses + stats.l1i_prefetch_misses + stats.l1i_wrong_path_misses
    return MetricsReport(
        label=label,
        isa=config.isa.value if config else "",
        sbd_mode=config.sbd_mode.value if config else "",
        btb_entries=config.btb_entries if config else 0,
        btb_unbounded=config.btb_unbounded if config else False,
        usbb_entries=config.usbb_entries if config else 0,
        rsbb_entries=config.rsbb_entries if config else 0,
        seed=config.seed if config else 0,
        retired=retired,
        cycles=stats.cycles,
        ipc=retired / stats.cycles if stats.cycles else 0.0,
        btb_misses=stats.btb_misses,
        btb_miss_mpki=mpki(stats.btb_misses, retired),
        btb_miss_l1_resident_mpki=mpki(stats.btb_misses_l1_resident, retired),
        btb_miss_l1_nonresident_mpki=mpki(stats.btb_misses_l1_nonresident, retired),
        l1_resident_share=stats.btb_misses_l1_resident / stats.btb_misses if stats.btb_misses else 0.0,
        mpki_by_class={k: mpki(v, retired) for k, v in stats.btb_misses_by_class.items()},
        mpki_by_region={k: mpki(v, retired) for k, v in stats.btb_misses_by_region.items()},
        decode_resteer_mpki=mpki(stats.decode_resteers, retired),
        execute_resteer_mpki=mpki(stats.execute_resteers, retired),
        sbb_covered_misses=stats.sbb_covered_misses,
        sbb_insertions=stats.sbb_insertions,
        sbb_insertions_head=stats.sbb_insertions_head,
        sbb_insertions_tail=stats.sbb_insertions_tail,
        sbb_hits=stats.sbb_hits,
        sbb_hits_committed=stats.sbb_hits_committed,
        bogus_supplied_targets=stats.bogus_supplied_targets,
        bogus_insertions=stats.bogus_insertions,
        decode_resteers=stats.decode_resteers,
        execute_resteers=stats.execute_resteers,
        decoder_idle_cycles=stats.decoder_idle_cycles,
        l1i_demand_misses=stats.l1i_demand_misses,
        l1i_prefetch_misses=stats.l1i_prefetch_misses,
        l1i_wrong_path_misses=stats.l1i_wrong_path_misses,
        l1i_miss_mpki=mpki(l1i_misses, retired),
        l1i_demand_miss_mpki=mpki(stats.l1i_demand_misses, retired),
        l1i_prefetch_miss_mpki=mpki(stats.l1i_prefetch_misses, retired),
        l1i_wrong_path_miss_mpki=mpki(stats.l1i_wrong_path_misses, retired),
        stats=stats,
    )


def compare_runs(baseline: MetricsReport, candidate: MetricsReport) -> RunComparison:
    return RunComparison(
        baseline=baseline.label,
        candidate=candidate.label,
        btb_miss_mpki_reduction_pct=percent_reduction(baseline.btb_miss_mpki, candidate.btb_miss_mpki),
        decoder_idle_cycle_reduction_pct=percent_reduction(
            baseline.decoder_idle_cycles, candidate.decoder_idle_cycles
        ),
        decode_resteer_reduction_pct=percent_reduction(baseline.decode_resteers, candidate.decode_resteers),
        execute_resteer_reduction_pct=percent_reduction(baseline.execute_resteers, candidate.execute_resteers),
        cycle_reduction_pct=percent_reduction(baseline.cycles, candidate.cycles),
        mpki_reduction_pct={
            name: percent_reduction(getattr(baseline, name), getattr(candidate, name)) for name in MPKI_FAMILIES
        },
    )


def reports_frame(reports: Sequence[MetricsReport]) -> pd.DataFrame:
    """One row per run, columns in CSV_COLUMNS order."""
    rows = [{col: getattr(report, col) for col in CSV_COLUMNS} for report in reports]
    return pd.DataFrame(rows, columns=CSV_COLUMNS)


def reports_json(reports: Sequence[MetricsReport],
                 comparisons: Sequence[RunComparison] = ()) -> str:
    payload = {
        "runs": [report.model_dump(mode="json") for report in reports],
        "comparisons": [comparison.model_dump(mode="json") for comparison in comparisons],
    }
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def write_reports(reports: Sequence[MetricsReport], out: Union[str, Path],
                  comparisons: Sequence[RunComparison] = ()) -> List[Path]:
    """
    Write <out>.json (nested counters) and <out>.csv (one row per run).

    Returns:
        Paths written
    """
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    json_path = out.with_suffix(".json")
    csv_path = out.with_suffix(".csv")
    json_path.write_text(reports_json(reports, comparisons), encoding="utf-8")
    reports_frame(reports).to_csv(csv_path, index=False, float_format="%.6f", lineterminator="\n")
    logger.info(f"Wrote {len(reports)} run(s) to {json_path} and {csv_path}")
    return [json_path, csv_path]
