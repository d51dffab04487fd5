"""
Opportunity analysis and paired-run suites.
"""

import logging
from typing import Dict, List, Sequence, Tuple

from pydantic import BaseModel, Field

from src.core.config import SbdMode, SimConfig
from src.memory.code_image import CodeImage
from src.predictors.audit import iso_storage_btb_entries
from src.shadow.models import Region
from src.trace.models import TraceRecord
from src.frontend.metrics import MetricsReport, RunComparison, compare_runs, compute_metrics, mpki
from src.frontend.simulator import run_simulation

logger = logging.getLogger(__name__)

SUITE_MODES = (SbdMode.OFF, SbdMode.HEAD, SbdMode.TAIL, SbdMode.BOTH)
ISO_LABEL = "iso-btb"
IDEAL_LABEL = "ideal-btb"


class OpportunityReport(BaseModel):
    """Where BTB misses fall when no shadow decoding is done."""
    retired: int
    btb_misses: int
    btb_miss_mpki: float
    btb_miss_l1_resident_mpki: float
    btb_miss_l1_nonresident_mpki: float
    l1_resident_share: float = Field(description="Share of BTB misses on L1-I resident lines")
    misses_by_class: Dict[str, int] = Field(default_factory=dict)
    mpki_by_class: Dict[str, float] = Field(default_factory=dict)
    misses_by_region: Dict[str, int] = Field(default_factory=dict)
    shadow_share: float = Field(description="Share of BTB misses in head or tail regions")


def analyze(image: CodeImage, records: Sequence[TraceRecord], config: SimConfig) -> OpportunityReport:
    """
    Run with shadow decoding off and break BTB misses down by L1-I residency,
    branch class and line region.
    """
    stats = run_simulation(image, records, config.model_copy(update={"sbd_mode": SbdMode.OFF}))
    retired = max(stats.retired, 1)
    misses = stats.btb_misses
    shadow = stats.btb_misses_by_region.get(Region.HEAD.value, 0) + stats.btb_misses_by_region.get(Region.TAIL.value, 0)
    report = OpportunityReport(
        retired=stats.retired,
        btb_misses=misses,
        btb_miss_mpki=mpki(misses, retired),
        btb_miss_l1_resident_mpki=mpki(stats.btb_misses_l1_resident, retired),
        btb_miss_l1_nonresident_mpki=mpki(stats.btb_misses_l1_nonresident, retired),
        l1_resident_share=stats.btb_misses_l1_resident / misses if misses else 0.0,
        misses_by_class=stats.btb_misses_by_class,
        mpki_by_class={k: mpki(v, retired) for k, v in stats.btb_misses_by_class.items()},
        misses_by_region=stats.btb_misses_by_region,
        shadow_share=shadow / misses if misses else 0.0,
    )
    logger.info(
        f"BTB-miss MPKI {report.btb_miss_mpki:.3f}, "
        f"{report.l1_resident_share:.1%} on L1-I resident lines, {report.shadow_share:.1%} in shadow regions"
    )
    return report


def suite_configs(config: SimConfig) -> List[Tuple[str, SimConfig]]:
    """
    Off, head-only, tail-only and both, plus two BTB-only references: a BTB
    enlarged by the SBB storage and an infinite, fully associative BTB.
    """
    runs = [(mode.value, config.model_copy(update={"sbd_mode": mode})) for mode in SUITE_MODES]
    iso = config.model_copy(update={"sbd_mode": SbdMode.OFF, "btb_entries": iso_storage_btb_entries(config)})
    runs.append((ISO_LABEL, iso))
    runs.append((IDEAL_LABEL, config.model_copy(update={"sbd_mode": SbdMode.OFF, "btb_unbounded": True})))
    return runs


def run_suite(image: CodeImage, records: Sequence[TraceRecord],
              config: SimConfig) -> Tuple[List[MetricsReport], List[RunComparison]]:
    """
    Run every suite configuration and compare each against the off run.
    """
    reports = []
    for label, run_config in suite_configs(config):
        stats = run_simulation(image, records, run_config)
        reports.append(compute_metrics(stats, label, run_config))
    baseline = reports[0]
    comparisons = [compare_runs(baseline, report) for report in reports[1:]]
    return reports, comparisons
