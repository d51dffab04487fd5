"""
Shadow branch decoding package.

Finds direct unconditional branches, calls and returns in the unexecuted
head and tail bytes of fetched cache lines.
"""

from .models import CacheLineView, IndexPolicy, Origin, Region, ShadowBranch, ShadowBranchKind
from .decoder import (
    ShadowBranchDecoder,
    classify_region,
    compute_length_vector,
    decode_head,
    decode_tail,
    enumerate_valid_paths,
    select_start_index,
)

__all__ = [
    "CacheLineView",
    "IndexPolicy",
    "Origin",
    "Region",
    "ShadowBranch",
    "ShadowBranchKind",
    "ShadowBranchDecoder",
    "classify_region",
    "compute_length_vector",
    "decode_head",
    "decode_tail",
    "enumerate_valid_paths",
    "select_start_index",
]
