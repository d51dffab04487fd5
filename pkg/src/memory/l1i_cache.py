"""
L1 instruction cache model: set-associative, true LRU, single miss latency.
"""

import logging
from collections import OrderedDict
from enum import Enum
from typing import Dict, List, NamedTuple, Optional

from src.shadow.models import LINE_MASK, LINE_SIZE

logger = logging.getLogger(__name__)


class AccessKind(str, Enum):
    DEMAND = "demand"
    PREFETCH = "prefetch"
    WRONG_PATH_PREFETCH = "wrong_path_prefetch"


class AccessResult(NamedTuple):
    """Outcome of one access; ready_at is when the line's bytes are usable."""
    hit: bool
    ready_at: int


class L1ICache:
    """
    True-LRU L1-I. Each set is an OrderedDict of line address -> fill-ready
    cycle, least recently used first.

    A line whose fill is still in flight counts as a hit; its bytes become
    usable at the recorded ready cycle. Wrong-path prefetches are real fills.
    """

    def __init__(self, size_bytes: int = 32768, ways: int = 8, miss_latency: int = 30):
        lines = size_bytes // LINE_SIZE
        if size_bytes % LINE_SIZE or ways < 1 or lines % ways:
            raise ValueError(f"Invalid L1-I geometry: {size_bytes} bytes, {ways} ways")
        self.size_bytes = size_bytes
        self.ways = ways
        self.sets = lines // ways
        self.miss_latency = miss_latency
        self._sets: List["OrderedDict[int, int]"] = [OrderedDict() for _ in range(self.sets)]
        self.hits: Dict[AccessKind, int] = {kind: 0 for kind in AccessKind}
        self.misses: Dict[AccessKind, int] = {kind: 0 for kind in AccessKind}
        self.evictions = 0

    def _set_for(self, line_addr: int) -> "OrderedDict[int, int]":
        if line_addr & LINE_MASK:
            raise ValueError(f"Line address 0x{line_addr:x} is not {LINE_SIZE}-byte aligned")
        return self._sets[(line_addr // LINE_SIZE) % self.sets]

    def access(self, line_addr: int, kind: AccessKind, now: int) -> AccessResult:
        """
        Access a line, allocating it on a miss with the LRU way as victim.

        Raises:
            ValueError: If line_addr is not 64-byte aligned
        """
        lru_set = self._set_for(line_addr)
        ready = lru_set.get(line_addr)
        if ready is not None:
            lru_set.move_to_end(line_addr)
            self.hits[kind] += 1
            return AccessResult(True, max(ready, now))

        if len(lru_set) >= self.ways:
            lru_set.popitem(last=False)
            self.evictions += 1
        ready = now + self.miss_latency
        lru_set[line_addr] = ready
        self.misses[kind] += 1
        return AccessResult(False, ready)

    def ready_at(self, line_addr: int) -> Optional[int]:
        """Fill-ready cycle of a cached line, None if absent. Does not touch LRU."""
        return self._set_for(line_addr).get(line_addr)

    def is_resident(self, line_addr: int, now: int) -> bool:
        ready = self.ready_at(line_addr)
        return ready is not None and ready <= now

    def accesses(self, kind: AccessKind) -> int:
        return self.hits[kind] + self.misses[kind]
