"""
Memory models: the sparse code image and the L1 instruction cache.
"""

from .code_image import CodeImage, CodeLayout, INVALID_FILL_BYTE
from .l1i_cache import AccessKind, AccessResult, L1ICache

__all__ = [
    "CodeImage",
    "CodeLayout",
    "INVALID_FILL_BYTE",
    "AccessKind",
    "AccessResult",
    "L1ICache",
]
