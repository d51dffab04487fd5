"""
Length and branch-class decoder for a documented x86 subset.

Covers legacy prefixes, REX (64-bit mode only), full ModRM/SIB/displacement
rules and this opcode table:

    50-5F push/pop, 90 nop, F8-FD flag ops, 31 xor, 88/89/8A/8B mov,
    68/6A push imm, 70-7F jcc rel8, 80-83 group-1 imm, B0-BF mov imm,
    C2/C3 ret, C6/C7 mov imm (/0), E8 call rel32, E9 jmp rel32, EB jmp rel8,
    FF /2 indirect call, FF /4 indirect jmp, 0F 80-8F jcc rel32, 0F 1F nop.

In 32-bit mode 40-4F are one-byte inc/dec. Anything else fails to decode,
as do 16-bit addressing and operand-size-prefixed relative branches.
"""

from typing import Optional, Sequence, Tuple

from src.isa.models import BranchClass, DecodedInstr, MAX_INSTRUCTION_LENGTH

LEGACY_PREFIXES = frozenset({0x66, 0x67, 0xF0, 0xF2, 0xF3, 0x2E, 0x36, 0x3E, 0x26, 0x64, 0x65})

ONE_BYTE_NONBRANCH = frozenset(
    list(range(0x50, 0x60)) + [0x90] + list(range(0xF8, 0xFE))
)
MODRM_NONBRANCH = frozenset({0x31, 0x88, 0x89, 0x8A, 0x8B})

X86_FILLER_TEMPLATES = {
    1: bytes([0x90]),
    2: bytes([0x31, 0xC0]),
    3: bytes([0x83, 0xC0, 0xFF]),
    4: bytes([0x8B, 0x44, 0x24, 0xFF]),
    5: bytes([0xB8, 0xFF, 0xFF, 0xFF, 0xFF]),
    6: bytes([0x81, 0xC0, 0xFF, 0xFF, 0xFF, 0xFF]),
    7: bytes([0xC7, 0x40, 0xFF, 0xFF, 0xFF, 0xFF, 0xFF]),
}


def _parse_modrm(data: Sequence[int], pos: int, end: int) -> Optional[Tuple[int, int]]:
    """Consume ModRM, optional SIB and displacement. Returns (next_pos, reg)."""
    if pos >= end:
        return None
    modrm = data[pos]
    mod = modrm >> 6
    reg = (modrm >> 3) & 7
    rm = modrm & 7
    pos += 1

    disp_size = 0
    if mod != 3:
        if rm == 4:
            if pos >= end:
                return None
            sib_base = data[pos] & 7
            pos += 1
            if mod == 0 and sib_base == 5:
                disp_size = 4
        if mod == 0 and rm == 5:
            disp_size = 4
        elif mod == 1:
            disp_size = 1
        elif mod == 2:
            disp_size = 4

    pos += disp_size
    if pos > end:
        return None
    return pos, reg


def _rel(data: Sequence[int], pos: int, size: int) -> int:
    return int.from_bytes(bytes(data[pos:pos + size]), "little", signed=True)


def decode_x86(data: Sequence[int], offset: int, mode64: bool = True) -> Optional[DecodedInstr]:
    """
    Decode one instruction from the supported x86 subset.

    Args:
        data: Byte sequence to decode from
        offset: Index of the first byte of the instruction
        mode64: True for 64-bit mode (REX prefixes), False for 32-bit mode

    Returns:
        DecodedInstr, or None for unknown opcodes and truncated encodings
    """
    end = min(len(data), offset + MAX_INSTRUCTION_LENGTH)
    pos = offset
    opsize16 = False
    addr_override = False
    rex_w = False

    while pos < end and data[pos] in LEGACY_PREFIXES:
        if data[pos] == 0x66:
            opsize16 = True
        elif data[pos] == 0x67:
            addr_override = True
        pos += 1

    if pos >= end:
        return None

    if mode64 and 0x40 <= data[pos] <= 0x4F:
        rex_w = bool(data[pos] & 0x08)
        pos += 1
        if pos >= end:
            return None
        # REX must sit directly in front of the opcode
        if data[pos] in LEGACY_PREFIXES or 0x40 <= data[pos] <= 0x4F:
            return None

    if addr_override and not mode64:
        return None

    opcode = data[pos]
    pos += 1

    def done(next_pos: int, branch_class: BranchClass = BranchClass.NON_BRANCH,
             disp: Optional[int] = None) -> Optional[DecodedInstr]:
        if next_pos > end:
            return None
        return DecodedInstr(next_pos - offset, branch_class, disp)

    def with_modrm(imm_size: int = 0) -> Optional[DecodedInstr]:
        parsed = _parse_modrm(data, pos, end)
        if parsed is None:
            return None
        return done(parsed[0] + imm_size)

    if opcode in ONE_BYTE_NONBRANCH:
        return done(pos)
    if not mode64 and 0x40 <= opcode <= 0x4F:
        return done(pos)
    if opcode in MODRM_NONBRANCH:
        return with_modrm()
    if opcode == 0x68:
        return done(pos + (2 if opsize16 else 4))
    if opcode == 0x6A:
        return done(pos + 1)
    if 0x70 <= opcode <= 0x7F:
        if pos + 1 > end:
            return None
        return done(pos + 1, BranchClass.DIRECT_COND, _rel(data, pos, 1))
    if opcode in (0x80, 0x83):
        return with_modrm(1)
    if opcode == 0x82:
        return None if mode64 else with_modrm(1)
    if opcode == 0x81:
        return with_modrm(2 if opsize16 else 4)
    if 0xB0 <= opcode <= 0xB7:
        return done(pos + 1)
    if 0xB8 <= opcode <= 0xBF:
        imm_size = 8 if rex_w else (2 if opsize16 else 4)
        return done(pos + imm_size)
    if opcode == 0xC2:
        return done(pos + 2, BranchClass.RETURN)
    if opcode == 0xC3:
        return done(pos, BranchClass.RETURN)
    if opcode in (0xC6, 0xC7):
        parsed = _parse_modrm(data, pos, end)
        if parsed is None or parsed[1] != 0:
            return None
        imm_size = 1 if opcode == 0xC6 else (2 if opsize16 else 4)
        return done(parsed[0] + imm_size)
    if opcode in (0xE8, 0xE9):
        if opsize16 or pos + 4 > end:
            return None
        branch_class = BranchClass.CALL if opcode == 0xE8 else BranchClass.DIRECT_UNCOND
        return done(pos + 4, branch_class, _rel(data, pos, 4))
    if opcode == 0xEB:
        if pos + 1 > end:
            return None
        return done(pos + 1, BranchClass.DIRECT_UNCOND, _rel(data, pos, 1))
    if opcode == 0xFF:
        parsed = _parse_modrm(data, pos, end)
        if parsed is None:
            return None
        if parsed[1] == 2:
            return done(parsed[0], BranchClass.INDIRECT_CALL)
        if parsed[1] == 4:
            return done(parsed[0], BranchClass.INDIRECT_UNCOND)
        return None
    if opcode == 0x0F:
        if pos >= end:
            return None
        second = data[pos]
        pos += 1
        if 0x80 <= second <= 0x8F:
            if opsize16 or pos + 4 > end:
                return None
            return done(pos + 4, BranchClass.DIRECT_COND, _rel(data, pos, 4))
        if second == 0x1F:
            return with_modrm()
        return None

    return None


def encode_x86_nonbranch(length: int) -> bytes:
    """Encode a non-branch filler instruction of 1..7 bytes."""
    try:
        return X86_FILLER_TEMPLATES[length]
    except KeyError:
        raise ValueError(f"x86 filler length must be 1..7, got {length}")


def encode_x86_branch(branch_class: BranchClass, disp: int = 0) -> bytes:
    """Encode a branch with a 32-bit relative displacement where one applies."""
    if branch_class == BranchClass.DIRECT_COND:
        return bytes([0x0F, 0x84]) + disp.to_bytes(4, "little", signed=True)
    if branch_class == BranchClass.DIRECT_UNCOND:
        return bytes([0xE9]) + disp.to_bytes(4, "little", signed=True)
    if branch_class == BranchClass.CALL:
        return bytes([0xE8]) + disp.to_bytes(4, "little", signed=True)
    if branch_class == BranchClass.RETURN:
        return bytes([0xC3])
    if branch_class == BranchClass.INDIRECT_UNCOND:
        return bytes([0xFF, 0xE0])
    if branch_class == BranchClass.INDIRECT_CALL:
        return bytes([0xFF, 0xD0])
    raise ValueError(f"No x86 encoding for {branch_class.name}")
