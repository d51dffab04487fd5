"""
ISA-independent decode entry points.

All functions here are pure and safe to call concurrently.
"""

from typing import Optional, Sequence

from src.isa.models import (
    BranchClass,
    DecodedInstr,
    DIRECT_CLASSES,
    IsaKind,
    SBB_SUPPORTED_CLASSES,
)
from src.isa.svl import decode_svl, SVL_INVALID_BYTE
from src.isa.x86_subset import decode_x86

ADDRESS_MASK = (1 << 64) - 1


def decode_at(data: Sequence[int], offset: int, isa: IsaKind) -> Optional[DecodedInstr]:
    """
    Decode the instruction starting at offset.

    Args:
        data: Byte sequence (a cache line or any other window)
        offset: Start index, must be < len(data)
        isa: Instruction set to decode

    Returns:
        DecodedInstr if a complete recognized instruction starts at offset and
        fits within data, otherwise None
    """
    if isa == IsaKind.SVL:
        return decode_svl(data, offset)
    if isa == IsaKind.X86_SUBSET:
        return decode_x86(data, offset, mode64=True)
    return decode_x86(data, offset, mode64=False)


def branch_target(pc: int, instr: DecodedInstr) -> int:
    """
    Absolute target of a direct branch: pc + length + rel_disp, wrapping at 64 bits.

    Raises:
        ValueError: If the instruction has no relative displacement
    """
    if instr.branch_class not in DIRECT_CLASSES or instr.rel_disp is None:
        raise ValueError(f"{instr.branch_class.name} has no relative displacement")
    return (pc + instr.length + instr.rel_disp) & ADDRESS_MASK


def is_sbb_supported(branch_class: BranchClass) -> bool:
    """True for the classes the shadow branch decoder keeps: jmp, call, return."""
    return branch_class in SBB_SUPPORTED_CLASSES


def padding_byte(isa: IsaKind) -> int:
    """Byte used to pad partially mapped lines; it never starts a valid instruction."""
    # 0xFF is invalid in SVL; in the x86 subset FF FF is the unsupported /7 form.
    return SVL_INVALID_BYTE
