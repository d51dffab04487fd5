"""
Synthetic variable-length ISA (SVL).

The first byte selects class and length:

    0x00-0x6F  non-branch, length 1 + (b & 7)
    0x70-0x8F  direct conditional, length 3, signed 16-bit displacement
    0x90-0xAF  direct unconditional, length 5, signed 32-bit displacement
    0xB0-0xCF  call, length 5, signed 32-bit displacement
    0xD0-0xDF  indirect unconditional, length 2
    0xE0-0xEF  return, length 1
    0xF0-0xFF  invalid

Displacements are little-endian.
"""

from typing import Optional, Sequence

from src.isa.models import BranchClass, DecodedInstr

SVL_INVALID_BYTE = 0xFF

COND_OPCODE = 0x70
UNCOND_OPCODE = 0x90
CALL_OPCODE = 0xB0
INDIRECT_OPCODE = 0xD0
RETURN_OPCODE = 0xE0


def decode_svl(data: Sequence[int], offset: int) -> Optional[DecodedInstr]:
    """
    Decode one SVL instruction starting at offset.

    Returns None for the invalid opcode range and for encodings that run past
    the end of data.
    """
    opcode = data[offset]
    available = len(data) - offset

    if opcode <= 0x6F:
        length = 1 + (opcode & 7)
        if length > available:
            return None
        return DecodedInstr(length, BranchClass.NON_BRANCH)

    if opcode <= 0x8F:
        if available < 3:
            return None
        disp = int.from_bytes(bytes(data[offset + 1:offset + 3]), "little", signed=True)
        return DecodedInstr(3, BranchClass.DIRECT_COND, disp)

    if opcode <= 0xCF:
        if available < 5:
            return None
        disp = int.from_bytes(bytes(data[offset + 1:offset + 5]), "little", signed=True)
        branch_class = BranchClass.DIRECT_UNCOND if opcode <= 0xAF else BranchClass.CALL
        return DecodedInstr(5, branch_class, disp)

    if opcode <= 0xDF:
        if available < 2:
            return None
        return DecodedInstr(2, BranchClass.INDIRECT_UNCOND)

    if opcode <= 0xEF:
        return DecodedInstr(1, BranchClass.RETURN)

    return None


def encode_svl_nonbranch(length: int, operand_bytes: Sequence[int] = ()) -> bytes:
    """
    Encode a non-branch of the given length (1..8).

    Missing operand bytes are filled with the invalid byte so that decoding
    from inside the instruction fails.
    """
    if not 1 <= length <= 8:
        raise ValueError(f"SVL non-branch length must be 1..8, got {length}")
    operands = list(operand_bytes)[:length - 1]
    operands += [SVL_INVALID_BYTE] * (length - 1 - len(operands))
    return bytes([length - 1] + operands)


def encode_svl_branch(branch_class: BranchClass, disp: int = 0) -> bytes:
    """Encode an SVL branch of the given class with a relative displacement."""
    if branch_class == BranchClass.DIRECT_COND:
        return bytes([COND_OPCODE]) + disp.to_bytes(2, "little", signed=True)
    if branch_class == BranchClass.DIRECT_UNCOND:
        return bytes([UNCOND_OPCODE]) + disp.to_bytes(4, "little", signed=True)
    if branch_class == BranchClass.CALL:
        return bytes([CALL_OPCODE]) + disp.to_bytes(4, "little", signed=True)
    if branch_class == BranchClass.INDIRECT_UNCOND:
        return bytes([INDIRECT_OPCODE, SVL_INVALID_BYTE])
    if branch_class == BranchClass.RETURN:
        return bytes([RETURN_OPCODE])
    raise ValueError(f"SVL has no encoding for {branch_class.name}")
