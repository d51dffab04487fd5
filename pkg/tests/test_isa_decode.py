"""
Tests for the SVL and x86-subset instruction decoders.
"""

import pytest

from src.isa.decoder import ADDRESS_MASK, branch_target, decode_at, is_sbb_supported
from src.isa.models import BranchClass, DecodedInstr, DIRECT_CLASSES, IsaKind
from src.isa.svl import encode_svl_branch, encode_svl_nonbranch
from src.isa.x86_subset import X86_FILLER_TEMPLATES, encode_x86_branch, encode_x86_nonbranch
from tests.fixtures.isa_test_data import IsaTestDataFactory, decode_examples, svl_expected_length


class TestSvlDecoder:
    """The SVL table is a bit-exact contract."""

    @pytest.mark.parametrize("first_byte", range(256))
    def test_every_first_byte_matches_table(self, first_byte):
        """
        CRITICAL TEST: Exhaustive check of all 256 opcodes against the table.
        """
        data = bytes([first_byte]) + bytes(15)
        expected_length, expected_class = svl_expected_length(first_byte)
        decoded = decode_at(data, 0, IsaKind.SVL)
        if expected_length == 0:
            assert decoded is None
        else:
            assert decoded.length == expected_length
            assert decoded.branch_class == expected_class

    def test_invalid_range_fails_at_any_offset(self):
        data = bytes([0x00, 0xF7, 0x01, 0xF7])
        assert decode_at(data, 1, IsaKind.SVL) is None
        assert decode_at(data, 3, IsaKind.SVL) is None

    def test_truncated_branch_fails(self):
        call = encode_svl_branch(BranchClass.CALL, 0x40)
        assert decode_at(call[:3], 0, IsaKind.SVL) is None
        assert decode_at(call, 0, IsaKind.SVL) == DecodedInstr(5, BranchClass.CALL, 0x40)

    def test_nonbranch_encoding_round_trips_length(self):
        for length in range(1, 9):
            encoded = encode_svl_nonbranch(length)
            assert len(encoded) == length
            assert decode_at(encoded, 0, IsaKind.SVL).length == length

    def test_nonbranch_padding_is_undecodable(self):
        """Operand bytes default to 0xFF so decoding inside an instruction fails."""
        encoded = encode_svl_nonbranch(6)
        for offset in range(1, 6):
            assert decode_at(encoded, offset, IsaKind.SVL) is None

    def test_nonbranch_length_out_of_range(self):
        with pytest.raises(ValueError):
            encode_svl_nonbranch(9)

    def test_negative_displacement(self):
        jump = encode_svl_branch(BranchClass.DIRECT_UNCOND, -0x20)
        decoded = decode_at(jump, 0, IsaKind.SVL)
        assert decoded.rel_disp == -0x20


class TestX86SubsetDecoder:
    """Length and class decoding for the documented x86 subset."""

    def test_hand_checked_vectors(self, decode_examples):
        for isa, data, offset, (length, branch_class, disp) in decode_examples:
            decoded = decode_at(data, offset, isa)
            assert decoded is not None, f"{data.hex()} @ {offset}"
            assert decoded.length == length
            assert decoded.branch_class == branch_class
            assert decoded.rel_disp == disp

    def test_truncated_call_fails(self):
        assert decode_at(bytes([0xE8, 0x00, 0x00]), 0, IsaKind.X86_SUBSET) is None

    def test_unknown_opcode_fails(self):
        for opcode in (0x00, 0x03, 0x0E, 0xCC, 0xF4):
            assert decode_at(bytes([opcode]) + bytes(8), 0, IsaKind.X86_SUBSET) is None

    def test_rex_is_a_prefix_only_in_64_bit_mode(self):
        data = bytes([0x45, 0x31, 0xC0])
        assert decode_at(data, 0, IsaKind.X86_SUBSET).length == 3
        assert decode_at(data, 0, IsaKind.X86_SUBSET_32).length == 1

    def test_unsupported_ff_forms_fail(self):
        assert decode_at(bytes([0xFF, 0xC0]), 0, IsaKind.X86_SUBSET) is None
        assert decode_at(bytes([0xFF, 0xFF]), 0, IsaKind.X86_SUBSET) is None

    def test_operand_size_prefix_on_relative_branch_fails(self):
        assert decode_at(bytes([0x66, 0xE9, 0, 0, 0, 0]), 0, IsaKind.X86_SUBSET) is None

    def test_operand_size_prefix_shrinks_immediate(self):
        assert decode_at(bytes([0x66, 0x81, 0xC0, 0x01, 0x00]), 0, IsaKind.X86_SUBSET).length == 5
        assert decode_at(bytes([0x81, 0xC0, 0x01, 0, 0, 0]), 0, IsaKind.X86_SUBSET).length == 6

    def test_sib_with_disp32_base(self):
        # mov eax, [disp32 + ecx*4]
        data = bytes([0x8B, 0x04, 0x8D, 0x10, 0x20, 0x30, 0x40])
        assert decode_at(data, 0, IsaKind.X86_SUBSET).length == 7

    def test_filler_templates_decode_to_their_length(self):
        for length, encoded in X86_FILLER_TEMPLATES.items():
            decoded = decode_at(encoded, 0, IsaKind.X86_SUBSET)
            assert decoded == DecodedInstr(length, BranchClass.NON_BRANCH)
            assert encode_x86_nonbranch(length) == encoded

    def test_branch_encodings_decode_to_their_class(self):
        for branch_class in (BranchClass.DIRECT_COND, BranchClass.DIRECT_UNCOND, BranchClass.CALL,
                             BranchClass.RETURN, BranchClass.INDIRECT_UNCOND, BranchClass.INDIRECT_CALL):
            encoded = encode_x86_branch(branch_class, -7)
            for isa in (IsaKind.X86_SUBSET, IsaKind.X86_SUBSET_32):
                decoded = decode_at(encoded, 0, isa)
                assert decoded.length == len(encoded)
                assert decoded.branch_class == branch_class
                if branch_class in DIRECT_CLASSES:
                    assert decoded.rel_disp == -7

    def test_decode_is_deterministic(self):
        lines = IsaTestDataFactory.create_random_lines(20, seed=3, isa=IsaKind.X86_SUBSET)
        for line in lines:
            first = [decode_at(line.data, i, IsaKind.X86_SUBSET) for i in range(64)]
            second = [decode_at(line.data, i, IsaKind.X86_SUBSET) for i in range(64)]
            assert first == second


class TestBranchTarget:
    """Absolute target arithmetic."""

    def test_worked_jump_target(self):
        instr = DecodedInstr(5, BranchClass.DIRECT_UNCOND, 0x3F9)
        assert branch_target(0x1000, instr) == 0x13FE

    def test_zero_displacement_is_fall_through(self):
        instr = DecodedInstr(5, BranchClass.CALL, 0)
        assert branch_target(0x4000, instr) == 0x4005

    def test_wraps_at_64_bits(self):
        instr = DecodedInstr(1, BranchClass.DIRECT_UNCOND, 0)
        assert branch_target(ADDRESS_MASK, instr) == 0

    def test_rejects_classes_without_displacement(self):
        with pytest.raises(ValueError):
            branch_target(0x1000, DecodedInstr(1, BranchClass.RETURN))

    def test_round_trip_on_decoded_branches(self):
        for disp in (-0x8000, -1, 0, 1, 0x7FFF):
            encoded = encode_svl_branch(BranchClass.DIRECT_COND, disp)
            decoded = decode_at(encoded, 0, IsaKind.SVL)
            pc = 0x500000
            assert branch_target(pc, decoded) - pc - decoded.length == decoded.rel_disp


class TestSbbSupport:
    """Only jumps, calls and returns go to the shadow branch buffers."""

    @pytest.mark.parametrize("branch_class,expected", [
        (BranchClass.NON_BRANCH, False),
        (BranchClass.DIRECT_COND, False),
        (BranchClass.DIRECT_UNCOND, True),
        (BranchClass.CALL, True),
        (BranchClass.RETURN, True),
        (BranchClass.INDIRECT_UNCOND, False),
        (BranchClass.INDIRECT_CALL, False),
    ])
    def test_supported_classes(self, branch_class, expected):
        assert is_sbb_supported(branch_class) is expected
