"""
Instruction-level types shared by the decoders, the shadow branch decoder
and the simulator.
"""

from enum import Enum, IntEnum
from typing import NamedTuple, Optional


class BranchClass(IntEnum):
    """Branch taxonomy. Values double as the trace file class codes."""
    NON_BRANCH = 0
    DIRECT_COND = 1
    DIRECT_UNCOND = 2
    CALL = 3
    RETURN = 4
    INDIRECT_UNCOND = 5
    INDIRECT_CALL = 6


class IsaKind(str, Enum):
    """Instruction set decoded during a run."""
    SVL = "svl"
    X86_SUBSET = "x86"
    X86_SUBSET_32 = "x86-32"


# Classes that carry an encoded relative displacement
DIRECT_CLASSES = frozenset({
    BranchClass.DIRECT_COND,
    BranchClass.DIRECT_UNCOND,
    BranchClass.CALL,
})

SBB_SUPPORTED_CLASSES = frozenset({
    BranchClass.DIRECT_UNCOND,
    BranchClass.CALL,
    BranchClass.RETURN,
})

MAX_INSTRUCTION_LENGTH = 15


class DecodedInstr(NamedTuple):
    """
    Result of decoding one instruction at a byte offset.

    rel_disp is present only for DIRECT_COND, DIRECT_UNCOND and CALL.
    """
    length: int
    branch_class: BranchClass
    rel_disp: Optional[int] = None
