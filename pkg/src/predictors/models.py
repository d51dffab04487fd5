"""
Data models for predictor structures and their bit-level entry layouts.
"""

from dataclasses import dataclass
from enum import Enum, IntEnum
from typing import NamedTuple, Optional, Tuple

from src.isa.models import BranchClass
from src.shadow.models import ShadowBranchKind

ADDRESS_BITS = 64


class BtbBranchType(IntEnum):
    """2-bit branch type stored in a BTB entry."""
    COND = 0
    UNCOND = 1
    CALL = 2
    OTHER = 3


_BTB_TYPE_BY_CLASS = {
    BranchClass.DIRECT_COND: BtbBranchType.COND,
    BranchClass.DIRECT_UNCOND: BtbBranchType.UNCOND,
    BranchClass.CALL: BtbBranchType.CALL,
    BranchClass.INDIRECT_CALL: BtbBranchType.CALL,
    BranchClass.RETURN: BtbBranchType.OTHER,
    BranchClass.INDIRECT_UNCOND: BtbBranchType.OTHER,
}


def btb_type_for_class(branch_class: BranchClass) -> BtbBranchType:
    """Map a committed branch class onto the BTB's 2-bit type field."""
    try:
        return _BTB_TYPE_BY_CLASS[branch_class]
    except KeyError:
        raise ValueError(f"{branch_class.name} is not a branch")


class BtbEntry(NamedTuple):
    """
    Payload of a BTB hit. Returns are stored as OTHER with target 0 and are
    predicted from the RAS.
    """
    branch_type: BtbBranchType
    target: int

    @property
    def is_return(self) -> bool:
        return self.branch_type == BtbBranchType.OTHER and self.target == 0


class SbbSource(str, Enum):
    USBB = "usbb"
    RSBB = "rsbb"


class SbbPrediction(NamedTuple):
    """Target supplied by a shadow branch buffer on a BTB miss."""
    source: SbbSource
    kind: ShadowBranchKind
    target: Optional[int]


@dataclass(frozen=True)
class EntryLayout:
    """Named bit fields of one structure entry."""
    name: str
    fields: Tuple[Tuple[str, int], ...]

    @property
    def total_bits(self) -> int:
        return sum(bits for _, bits in self.fields)


def btb_layout(tag_bits: int = 10) -> EntryLayout:
    return EntryLayout("BTB", (
        ("tag", tag_bits), ("valid", 1), ("nru", 1), ("branch_type", 2), ("target", ADDRESS_BITS),
    ))


def usbb_layout(tag_bits: int = 10) -> EntryLayout:
    return EntryLayout("U-SBB", (
        ("tag", tag_bits), ("valid", 1), ("nru", 1), ("retired", 1), ("is_call", 1),
        ("target", ADDRESS_BITS),
    ))


def rsbb_layout(tag_bits: int = 10) -> EntryLayout:
    return EntryLayout("R-SBB", (
        ("tag", tag_bits), ("valid", 1), ("nru", 1), ("retired", 1), ("offset", 6), ("spare", 1),
    ))
