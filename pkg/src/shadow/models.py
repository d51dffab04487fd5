"""
Types for the shadow branch decoder.
"""

from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple, Optional, Tuple

LINE_SIZE = 64
LINE_MASK = LINE_SIZE - 1

# Length vector over a head region: lengths[i] is the decoded length at byte i, 0 if invalid
LengthVector = Tuple[int, ...]


class IndexPolicy(str, Enum):
    """Start-index selection policy for head decoding."""
    FIRST = "first"
    ZERO = "zero"
    MERGE = "merge"


class ShadowBranchKind(str, Enum):
    """Branch kinds kept by the shadow branch buffers."""
    UNCOND = "uncond"
    CALL = "call"
    RETURN = "return"


class Origin(str, Enum):
    """Shadow region a branch was discovered in."""
    HEAD = "head"
    TAIL = "tail"


class Region(str, Enum):
    """Position of a byte relative to the last executed span of its line."""
    HEAD = "head"
    TAIL = "tail"
    EXECUTED = "executed"
    UNSEEN = "unseen"


@dataclass(frozen=True)
class CacheLineView:
    """
    One 64-byte line as seen by the shadow branch decoder.

    entry_offset is the byte the line was entered at (0 for fall-through
    entries); tail_start is the first byte after the taken exit, if any.
    """
    base_addr: int
    data: bytes
    entry_offset: int = 0
    tail_start: Optional[int] = None

    def __post_init__(self):
        if self.base_addr & LINE_MASK:
            raise ValueError(f"Line base 0x{self.base_addr:x} is not 64-byte aligned")
        if len(self.data) != LINE_SIZE:
            raise ValueError(f"Line must hold exactly {LINE_SIZE} bytes, got {len(self.data)}")
        if not 0 <= self.entry_offset <= LINE_MASK:
            raise ValueError(f"entry_offset {self.entry_offset} outside 0..63")
        if self.tail_start is not None and not 0 <= self.tail_start <= LINE_SIZE:
            raise ValueError(f"tail_start {self.tail_start} outside 0..64")


class ShadowBranch(NamedTuple):
    """A supported branch found in a shadow region. target is None for returns."""
    kind: ShadowBranchKind
    pc: int
    target: Optional[int]
    line_offset: int
    origin: Origin
