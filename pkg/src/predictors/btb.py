"""
Branch Target Buffer.
"""

import logging
from typing import Dict, Optional

from src.isa.models import BranchClass
from src.predictors.models import BtbBranchType, BtbEntry, btb_layout, btb_type_for_class
from src.predictors.tagged_buffer import TaggedBuffer

logger = logging.getLogger(__name__)


class BranchTargetBuffer:
    """
    4-way partially tagged BTB with NRU replacement.

    Returns are stored as OTHER with target 0; their target comes from the
    RAS. Indirect jumps keep their most recent target.

    With unbounded=True the BTB is infinite and fully associative with full
    tags: it never evicts or aliases, so only first executions miss.
    """

    def __init__(self, entries: int = 8192, ways: int = 4, tag_bits: int = 10, unbounded: bool = False):
        self.layout = btb_layout(tag_bits)
        self.unbounded = unbounded
        self._ideal: Dict[int, BtbEntry] = {}
        self._buffer = TaggedBuffer(0 if unbounded else entries, ways, tag_bits, name="BTB")

    @property
    def entries(self) -> int:
        return len(self._ideal) if self.unbounded else self._buffer.entries

    @property
    def sets(self) -> int:
        return 1 if self.unbounded else self._buffer.sets

    def lookup(self, pc: int) -> Optional[BtbEntry]:
        if self.unbounded:
            return self._ideal.get(pc)
        way = self._buffer.lookup(pc)
        return None if way is None else way.payload

    def insert(self, pc: int, branch_type: BtbBranchType, target: int) -> bool:
        """Allocate or refresh the entry for pc. Returns True on allocation."""
        entry = BtbEntry(BtbBranchType(branch_type), target)
        if self.unbounded:
            allocated = pc not in self._ideal
            self._ideal[pc] = entry
            return allocated
        return self._buffer.insert(pc, entry)

    def update(self, pc: int, branch_class: BranchClass, target: int) -> bool:
        """Commit-time fill for a taken branch of the given class."""
        branch_type = btb_type_for_class(branch_class)
        stored_target = 0 if branch_class == BranchClass.RETURN else target
        return self.insert(pc, branch_type, stored_target)

    def occupancy(self) -> int:
        return len(self._ideal) if self.unbounded else self._buffer.occupancy()
