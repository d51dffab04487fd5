"""
Decoupled front-end simulator, opportunity analysis and metrics.
"""

from .models import FetchedInstr, FtqEntry, Stats
from .simulator import FrontEndSimulator, run_simulation
from .metrics import (
    CSV_COLUMNS,
    MetricsReport,
    RunComparison,
    compare_runs,
    compute_metrics,
    write_reports,
)
from .analysis import OpportunityReport, analyze, run_suite, suite_configs

__all__ = [
    "FetchedInstr",
    "FtqEntry",
    "Stats",
    "FrontEndSimulator",
    "run_simulation",
    "CSV_COLUMNS",
    "MetricsReport",
    "RunComparison",
    "compare_runs",
    "compute_metrics",
    "write_reports",
    "OpportunityReport",
    "analyze",
    "run_suite",
    "suite_configs",
]
