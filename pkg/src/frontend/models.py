"""
Data models for the front-end simulator: pipeline entries and run statistics.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, Field

from src.isa.models import BranchClass
from src.predictors.models import SbbSource


class PredictionSource(str, Enum):
    NONE = "none"
    BTB = "btb"
    SBB = "sbb"


class ResteerStage(str, Enum):
    DECODE = "decode"
    EXECUTE = "execute"


@dataclass
class FetchedInstr:
    """
    One instruction of a predicted block.

    trace_index is None for wrong-path instructions. When the IAG's
    prediction for this instruction diverges from the trace, `resteer` names
    the stage that detects it and `ras_checkpoint` holds the RAS state from
    before the prediction.
    """
    pc: int
    length: int
    branch_class: BranchClass
    trace_index: Optional[int]
    predicted_taken: bool = False
    predicted_target: Optional[int] = None
    source: PredictionSource = PredictionSource.NONE
    sbb_source: Optional[SbbSource] = None
    btb_hit: bool = False
    line_resident: bool = False
    resteer: Optional[ResteerStage] = None
    ras_checkpoint: Optional[Tuple[int, ...]] = None
    avail_at: int = 0

    @property
    def on_path(self) -> bool:
        return self.trace_index is not None


@dataclass
class FtqEntry:
    """One predicted basic block between the IAG and fetch."""
    start_pc: int
    instrs: List[FetchedInstr]
    lines: Tuple[int, ...]
    start_is_target: bool
    wrong_path: bool
    ready_at: int = 0
    demand_issued: bool = False

    @property
    def end_pc(self) -> int:
        last = self.instrs[-1]
        return last.pc + last.length

    @property
    def exit_taken(self) -> bool:
        return self.instrs[-1].predicted_taken


@dataclass
class SimCounters:
    """Mutable counters updated inside the cycle loop."""
    retired: int = 0
    cycles: int = 0
    decoder_idle_cycles: int = 0
    wrong_path_instructions: int = 0
    btb_misses: int = 0
    btb_misses_l1_resident: int = 0
    btb_misses_by_class: Dict[str, int] = field(default_factory=dict)
    btb_misses_by_region: Dict[str, int] = field(default_factory=dict)
    sbb_covered_misses: int = 0
    sbb_insertions_head: int = 0
    sbb_insertions_tail: int = 0
    sbb_insertions_by_kind: Dict[str, int] = field(default_factory=dict)
    sbb_refreshes: int = 0
    sbb_hits: int = 0
    sbb_hits_committed: int = 0
    bogus_supplied_targets: int = 0
    bogus_insertions: int = 0
    decode_resteers: int = 0
    execute_resteers: int = 0
    resteers_by_class: Dict[str, int] = field(default_factory=dict)
    sbd_head_decodes: int = 0
    sbd_tail_decodes: int = 0

    def bump(self, table: Dict[str, int], key: str) -> None:
        table[key] = table.get(key, 0) + 1


class Stats(BaseModel):
    """Counters of one simulation run."""
    retired: int = Field(default=0, description="Committed instructions")
    cycles: int = Field(default=0, description="Simulated cycles")
    decoder_idle_cycles: int = Field(default=0, description="Cycles in which decode consumed nothing")
    wrong_path_instructions: int = Field(default=0, description="Wrong-path instructions that reached decode")

    l1i_demand_hits: int = 0
    l1i_demand_misses: int = 0
    l1i_prefetch_hits: int = 0
    l1i_prefetch_misses: int = 0
    l1i_wrong_path_hits: int = 0
    l1i_wrong_path_misses: int = 0

    btb_misses: int = Field(default=0, description="Committed taken branches without a correct BTB or SBB target")
    btb_misses_l1_resident: int = 0
    btb_misses_l1_nonresident: int = 0
    btb_misses_by_class: Dict[str, int] = Field(default_factory=dict)
    btb_misses_by_region: Dict[str, int] = Field(default_factory=dict)
    sbb_covered_misses: int = Field(default=0, description="BTB misses whose target the SBB supplied correctly")

    sbb_insertions: int = 0
    sbb_insertions_head: int = 0
    sbb_insertions_tail: int = 0
    sbb_insertions_by_kind: Dict[str, int] = Field(default_factory=dict)
    sbb_refreshes: int = 0
    sbb_hits: int = 0
    sbb_hits_committed: int = 0
    bogus_supplied_targets: int = 0
    bogus_insertions: int = 0

    decode_resteers: int = 0
    execute_resteers: int = 0
    resteers_by_class: Dict[str, int] = Field(default_factory=dict)
    sbd_head_decodes: int = 0
    sbd_tail_decodes: int = 0
