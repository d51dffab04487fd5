"""
Instruction decoding package.

Decodes single instructions (length, branch class, displacement) for the
synthetic SVL ISA and an x86 subset in 64-bit and 32-bit modes.
"""

from .models import BranchClass, DecodedInstr, IsaKind
from .decoder import decode_at, branch_target, is_sbb_supported, padding_byte

__all__ = [
    "BranchClass",
    "DecodedInstr",
    "IsaKind",
    "decode_at",
    "branch_target",
    "is_sbb_supported",
    "padding_byte",
]
