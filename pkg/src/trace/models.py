"""
Data models for committed-instruction traces.
"""

from enum import Enum
from typing import NamedTuple

from src.isa.models import BranchClass

TAKEN_FLAG = 0x01


class TraceRecord(NamedTuple):
    """One committed instruction. target is 0 when the instruction has none."""
    pc: int
    target: int
    length: int
    branch_class: BranchClass
    taken: bool

    @property
    def next_pc(self) -> int:
        """Address of the committed successor."""
        return self.target if self.taken else self.pc + self.length

    @property
    def is_branch(self) -> bool:
        return self.branch_class != BranchClass.NON_BRANCH


class ViolationKind(str, Enum):
    RECORD = "record"
    UNMAPPED = "unmapped"
    DECODE = "decode"
    LENGTH = "length"
    CLASS = "class"
    TARGET = "target"
    CONTROL_FLOW = "control_flow"


class TraceViolation(NamedTuple):
    index: int
    kind: ViolationKind
    message: str
