"""
Shadow Branch Decoder (SBD).

Head regions (bytes before the entry point) are decoded by Index Computation
and Path Validation: a Length vector is built by decoding at every byte, each
start index is walked p <- p + lengths[p], and only walks landing exactly on
the entry offset are valid. One valid start is selected by the index policy
and decoded. Tail regions (bytes after the taken exit) start at a known
instruction boundary and are decoded linearly.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from src.isa.decoder import branch_target, decode_at, is_sbb_supported
from src.isa.models import BranchClass, DecodedInstr, IsaKind
from src.shadow.models import (
    CacheLineView,
    IndexPolicy,
    LengthVector,
    LINE_SIZE,
    Origin,
    Region,
    ShadowBranch,
    ShadowBranchKind,
)

logger = logging.getLogger(__name__)

DEFAULT_MAX_VALID_PATHS = 6

_KIND_BY_CLASS = {
    BranchClass.DIRECT_UNCOND: ShadowBranchKind.UNCOND,
    BranchClass.CALL: ShadowBranchKind.CALL,
    BranchClass.RETURN: ShadowBranchKind.RETURN,
}


def _make_branch(line: CacheLineView, offset: int, instr: DecodedInstr, origin: Origin) -> ShadowBranch:
    pc = line.base_addr + offset
    kind = _KIND_BY_CLASS[instr.branch_class]
    target = None if kind == ShadowBranchKind.RETURN else branch_target(pc, instr)
    return ShadowBranch(kind, pc, target, offset, origin)


def compute_length_vector(line: CacheLineView, isa: IsaKind) -> LengthVector:
    """
    Decode at every byte of the head region [0, entry_offset).

    Instructions may read bytes at and beyond the entry offset; they simply
    never land on it and so invalidate their path later.
    """
    lengths = []
    for offset in range(line.entry_offset):
        decoded = decode_at(line.data, offset, isa)
        lengths.append(decoded.length if decoded is not None else 0)
    return tuple(lengths)


def _walk(start: int, lv: LengthVector, entry_offset: int) -> List[int]:
    """Indices visited by the walk from start, stopping at or past entry_offset."""
    visited = []
    p = start
    while p < entry_offset:
        visited.append(p)
        if lv[p] == 0:
            break
        p += lv[p]
    return visited


def enumerate_valid_paths(lv: LengthVector, entry_offset: int) -> List[int]:
    """
    Start indices whose length-chain walk lands exactly on entry_offset.

    Memoized backwards over the vector; equal to walking each start naively.

    Returns:
        Valid start indices in ascending order
    """
    valid = [False] * (entry_offset + 1)
    valid[entry_offset] = True
    for p in range(entry_offset - 1, -1, -1):
        length = lv[p]
        if length == 0:
            continue
        nxt = p + length
        if nxt <= entry_offset:
            valid[p] = valid[nxt]
    return [p for p in range(entry_offset) if valid[p]]


def select_start_index(valid: Sequence[int], lv: LengthVector, policy: IndexPolicy,
                       max_valid_paths: int = DEFAULT_MAX_VALID_PATHS) -> Optional[int]:
    """
    Choose the start index to decode a head region from.

    Args:
        valid: Valid start indices, ascending
        lv: Length vector of the head region (its length is the entry offset)
        policy: FIRST (smallest valid), ZERO (0 if valid) or MERGE (convergence point)
        max_valid_paths: Lines with more valid starts than this are discarded

    Returns:
        Selected start index, or None when nothing should be decoded
    """
    if not valid or len(valid) > max_valid_paths:
        return None

    if policy == IndexPolicy.FIRST:
        return valid[0]
    if policy == IndexPolicy.ZERO:
        return 0 if valid[0] == 0 else None

    entry_offset = len(lv)
    common = None
    for start in valid:
        visited = set(_walk(start, lv, entry_offset))
        common = visited if common is None else common & visited
    return min(common) if common else None


def decode_head(line: CacheLineView, isa: IsaKind, policy: IndexPolicy = IndexPolicy.FIRST,
                cap: int = DEFAULT_MAX_VALID_PATHS) -> List[ShadowBranch]:
    """
    Decode the head shadow region of a line and return its supported branches.

    Returns an empty list for lines without a head region and for lines whose
    start index cannot be selected.
    """
    if line.entry_offset == 0:
        return []

    lv = compute_length_vector(line, isa)
    valid = enumerate_valid_paths(lv, line.entry_offset)
    start = select_start_index(valid, lv, policy, cap)
    if start is None:
        return []

    branches = []
    for offset in _walk(start, lv, line.entry_offset):
        decoded = decode_at(line.data, offset, isa)
        if decoded is not None and is_sbb_supported(decoded.branch_class):
            branches.append(_make_branch(line, offset, decoded, Origin.HEAD))
    return branches


def decode_tail(line: CacheLineView, isa: IsaKind) -> List[ShadowBranch]:
    """
    Linearly decode the tail shadow region from tail_start.

    Stops at the first decode failure or at an instruction that would cross
    the end of the line.

    Raises:
        ValueError: If the line has no tail_start
    """
    if line.tail_start is None:
        raise ValueError("decode_tail requires a line with tail_start")

    branches = []
    offset = line.tail_start
    while offset < LINE_SIZE:
        decoded = decode_at(line.data, offset, isa)
        if decoded is None:
            break
        if is_sbb_supported(decoded.branch_class):
            branches.append(_make_branch(line, offset, decoded, Origin.TAIL))
        offset += decoded.length
    return branches


def classify_region(offset: int, entry_offset: Optional[int], tail_start: Optional[int]) -> Region:
    """
    Classify a byte offset against the last executed span of its line.

    Args:
        offset: Byte offset within the line
        entry_offset: Entry offset of the last visit, None if never visited
        tail_start: First byte after the last visit's taken exit, if any
    """
    if entry_offset is None:
        return Region.UNSEEN
    if offset < entry_offset:
        return Region.HEAD
    if tail_start is not None and offset >= tail_start:
        return Region.TAIL
    return Region.EXECUTED


@dataclass
class LineDecodeReport:
    """Everything the decoder derives for one line, for debugging and golden files."""
    line: CacheLineView
    lengths: LengthVector = ()
    valid_starts: List[int] = field(default_factory=list)
    selected: Dict[IndexPolicy, Optional[int]] = field(default_factory=dict)
    head_branches: List[ShadowBranch] = field(default_factory=list)
    tail_branches: List[ShadowBranch] = field(default_factory=list)


class ShadowBranchDecoder:
    """
    Run-scoped front end to the decode functions.

    Lines are immutable during a run, so results are memoized per
    (line, entry offset) and (line, tail start).
    """

    def __init__(self, isa: IsaKind, policy: IndexPolicy = IndexPolicy.FIRST,
                 max_valid_paths: int = DEFAULT_MAX_VALID_PATHS):
        self.isa = isa
        self.policy = policy
        self.max_valid_paths = max_valid_paths
        self._head_cache: Dict[Tuple[int, int], Tuple[ShadowBranch, ...]] = {}
        self._tail_cache: Dict[Tuple[int, int], Tuple[ShadowBranch, ...]] = {}
        self.head_decodes = 0
        self.tail_decodes = 0

    def decode_head(self, base_addr: int, data: bytes, entry_offset: int) -> Tuple[ShadowBranch, ...]:
        key = (base_addr, entry_offset)
        cached = self._head_cache.get(key)
        if cached is None:
            line = CacheLineView(base_addr, data, entry_offset)
            cached = tuple(decode_head(line, self.isa, self.policy, self.max_valid_paths))
            self._head_cache[key] = cached
        self.head_decodes += 1
        return cached

    def decode_tail(self, base_addr: int, data: bytes, tail_start: int) -> Tuple[ShadowBranch, ...]:
        key = (base_addr, tail_start)
        cached = self._tail_cache.get(key)
        if cached is None:
            line = CacheLineView(base_addr, data, tail_start=tail_start)
            cached = tuple(decode_tail(line, self.isa))
            self._tail_cache[key] = cached
        self.tail_decodes += 1
        return cached

    def explain(self, line: CacheLineView) -> LineDecodeReport:
        """Full breakdown of a line under every index policy."""
        report = LineDecodeReport(line=line)
        if line.entry_offset > 0:
            report.lengths = compute_length_vector(line, self.isa)
            report.valid_starts = enumerate_valid_paths(report.lengths, line.entry_offset)
            for policy in IndexPolicy:
                report.selected[policy] = select_start_index(
                    report.valid_starts, report.lengths, policy, self.max_valid_paths
                )
            report.head_branches = decode_head(line, self.isa, self.policy, self.max_valid_paths)
        if line.tail_start is not None:
            report.tail_branches = decode_tail(line, self.isa)
        logger.debug(
            f"Explained line 0x{line.base_addr:x}: {len(report.valid_starts)} valid starts, "
            f"{len(report.head_branches)} head / {len(report.tail_branches)} tail branches"
        )
        return report
