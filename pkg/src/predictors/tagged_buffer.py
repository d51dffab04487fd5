"""
Set-associative, partially tagged buffer with 1-bit NRU replacement.

Shared by the BTB and both shadow branch buffers. Tags are truncated, so two
addresses with equal index and tag alias onto the same entry; everything a
buffer supplies is speculative and verified later in the pipeline.
"""

import logging
from dataclasses import dataclass
from typing import Any, List, Optional, Tuple

from src.shadow.models import LINE_MASK

logger = logging.getLogger(__name__)

LINE_SHIFT = 6


@dataclass
class Way:
    """One way of a set. `offset` is only compared by line-granular buffers."""
    valid: bool = False
    tag: int = 0
    used: bool = False
    retired: bool = False
    offset: int = 0
    payload: Any = None


class TaggedBuffer:
    """
    Tagged set-associative storage.

    Index is key mod set-count and tag is the next tag_bits bits above the
    index. For line-granular buffers the key is the line number (pc >> 6)
    and a hit also requires the stored 6-bit offset to match.

    Lookups are side-effect free; only inserts and refreshes touch NRU state.
    With retired_priority the victim search prefers invalid ways, then valid
    ways whose retired bit is clear, then retired ways.
    """

    def __init__(self, entries: int, ways: int, tag_bits: int = 10,
                 line_granular: bool = False, retired_priority: bool = False, name: str = "buffer"):
        if entries < 0 or ways < 1:
            raise ValueError(f"{name}: invalid geometry entries={entries} ways={ways}")
        if entries % ways:
            raise ValueError(f"{name}: {entries} entries not divisible by {ways} ways")
        self.name = name
        self.entries = entries
        self.ways = ways
        self.sets = entries // ways
        self.tag_mask = (1 << tag_bits) - 1
        self.line_granular = line_granular
        self.retired_priority = retired_priority
        self._sets: List[List[Way]] = [[Way() for _ in range(ways)] for _ in range(self.sets)]

    @property
    def enabled(self) -> bool:
        return self.sets > 0

    def _locate(self, pc: int) -> Tuple[int, int, int]:
        if self.line_granular:
            key, offset = pc >> LINE_SHIFT, pc & LINE_MASK
        else:
            key, offset = pc, 0
        return key % self.sets, (key // self.sets) & self.tag_mask, offset

    def _find(self, pc: int) -> Tuple[int, Optional[int]]:
        set_idx, tag, offset = self._locate(pc)
        for way_idx, way in enumerate(self._sets[set_idx]):
            if way.valid and way.tag == tag and way.offset == offset:
                return set_idx, way_idx
        return set_idx, None

    def lookup(self, pc: int) -> Optional[Way]:
        """Return the matching way (partial-tag compare) or None."""
        if not self.enabled:
            return None
        set_idx, way_idx = self._find(pc)
        return None if way_idx is None else self._sets[set_idx][way_idx]

    def _touch(self, set_idx: int, way_idx: int) -> None:
        ways = self._sets[set_idx]
        ways[way_idx].used = True
        if all(way.used for way in ways):
            for i, way in enumerate(ways):
                way.used = i == way_idx

    def _priority(self, way: Way) -> int:
        if not way.valid:
            return 0
        if self.retired_priority and way.retired:
            return 2
        return 1

    def victim(self, set_idx: int) -> int:
        """
        Way to replace in a set: best priority class first, then the first
        way of that class with its use bit clear, then the lowest index.
        """
        ways = self._sets[set_idx]
        best = min(self._priority(way) for way in ways)
        candidates = [i for i, way in enumerate(ways) if self._priority(way) == best]
        for i in candidates:
            if not ways[i].used:
                return i
        return candidates[0]

    def insert(self, pc: int, payload: Any = None) -> bool:
        """
        Insert or refresh the entry for pc.

        Returns:
            True when a way was allocated, False when an existing entry was
            refreshed (payload replaced, retired bit kept) or the buffer is
            disabled
        """
        if not self.enabled:
            return False
        set_idx, way_idx = self._find(pc)
        if way_idx is not None:
            self._sets[set_idx][way_idx].payload = payload
            self._touch(set_idx, way_idx)
            return False

        _, tag, offset = self._locate(pc)
        way_idx = self.victim(set_idx)
        way = self._sets[set_idx][way_idx]
        if way.valid:
            logger.debug(f"{self.name}: evicting way {way_idx} of set {set_idx}")
        way.valid, way.tag, way.offset = True, tag, offset
        way.retired = False
        way.payload = payload
        self._touch(set_idx, way_idx)
        return True

    def mark_retired(self, pc: int) -> bool:
        way = self.lookup(pc)
        if way is None:
            return False
        way.retired = True
        return True

    def invalidate(self, pc: int) -> bool:
        way = self.lookup(pc)
        if way is None:
            return False
        way.valid = False
        way.used = False
        way.retired = False
        way.payload = None
        return True

    def occupancy(self) -> int:
        return sum(way.valid for ways in self._sets for way in ways)

    def set_ways(self, set_idx: int) -> List[Way]:
        """The ways of one set, for inspection."""
        return self._sets[set_idx]

    def set_index(self, pc: int) -> int:
        return self._locate(pc)[0]
