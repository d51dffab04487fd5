"""
Shadow Branch Buffer: the U-SBB for direct unconditional jumps and calls and
the R-SBB for returns.
"""

import logging
from typing import Optional

from src.predictors.models import SbbPrediction, SbbSource, rsbb_layout, usbb_layout
from src.predictors.tagged_buffer import TaggedBuffer
from src.shadow.models import ShadowBranch, ShadowBranchKind

logger = logging.getLogger(__name__)


class ShadowBranchBuffer:
    """
    Both SBB partitions behind one lookup.

    The U-SBB is pc-indexed and stores (is_call, target). The R-SBB is
    indexed by line number and stores the return's 6-bit line offset, so
    several returns on one line occupy several ways. Eviction prefers
    invalid ways, then entries whose prediction never committed.
    """

    def __init__(self, usbb_entries: int = 768, rsbb_entries: int = 2024,
                 ways: int = 4, tag_bits: int = 10):
        self.usbb_layout = usbb_layout(tag_bits)
        self.rsbb_layout = rsbb_layout(tag_bits)
        self.usbb = TaggedBuffer(usbb_entries, ways, tag_bits, retired_priority=True, name="U-SBB")
        self.rsbb = TaggedBuffer(
            rsbb_entries, ways, tag_bits, line_granular=True, retired_priority=True, name="R-SBB"
        )

    def lookup(self, pc: int) -> Optional[SbbPrediction]:
        """U-SBB first, then R-SBB. Return predictions carry no target."""
        way = self.usbb.lookup(pc)
        if way is not None:
            is_call, target = way.payload
            kind = ShadowBranchKind.CALL if is_call else ShadowBranchKind.UNCOND
            return SbbPrediction(SbbSource.USBB, kind, target)
        if self.rsbb.lookup(pc) is not None:
            return SbbPrediction(SbbSource.RSBB, ShadowBranchKind.RETURN, None)
        return None

    def usbb_insert(self, sb: ShadowBranch) -> bool:
        """
        Raises:
            ValueError: If the shadow branch is a return
        """
        if sb.kind not in (ShadowBranchKind.UNCOND, ShadowBranchKind.CALL):
            raise ValueError(f"U-SBB only holds jumps and calls, got {sb.kind.value}")
        return self.usbb.insert(sb.pc, (sb.kind == ShadowBranchKind.CALL, sb.target))

    def rsbb_insert(self, sb: ShadowBranch) -> bool:
        """
        Raises:
            ValueError: If the shadow branch is not a return
        """
        if sb.kind != ShadowBranchKind.RETURN:
            raise ValueError(f"R-SBB only holds returns, got {sb.kind.value}")
        return self.rsbb.insert(sb.pc)

    def insert(self, sb: ShadowBranch) -> bool:
        if sb.kind == ShadowBranchKind.RETURN:
            return self.rsbb_insert(sb)
        return self.usbb_insert(sb)

    def _partition(self, source: SbbSource) -> TaggedBuffer:
        return self.usbb if source == SbbSource.USBB else self.rsbb

    def mark_retired(self, source: SbbSource, pc: int) -> bool:
        """Set the retired bit of the entry that supplied a committed prediction."""
        return self._partition(source).mark_retired(pc)

    def invalidate(self, source: SbbSource, pc: int) -> bool:
        return self._partition(source).invalidate(pc)
