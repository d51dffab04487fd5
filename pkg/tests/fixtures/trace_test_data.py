"""
Trace Test Data for Simulator and Trace Tests

Small hand-built SVL programs with their committed traces. Each program is
laid out at TEST_BASE and the traces follow the code exactly, so they pass
trace validation.
"""

from typing import List, Tuple

import pytest

from src.isa.models import BranchClass
from src.isa.svl import encode_svl_branch, encode_svl_nonbranch
from src.memory.code_image import CodeImage
from src.trace.models import TraceRecord

TEST_BASE = 0x400000


class TraceTestDataFactory:
    """Factory class for code images and matching committed traces."""

    @staticmethod
    def create_sample_records() -> List[TraceRecord]:
        return [
            TraceRecord(0x400000, 0, 4, BranchClass.NON_BRANCH, False),
            TraceRecord(0x400004, 0x400100, 5, BranchClass.CALL, True),
            TraceRecord(0x400100, 0x400009, 1, BranchClass.RETURN, True),
        ]

    @staticmethod
    def create_straight_line(count: int = 1000) -> Tuple[CodeImage, List[TraceRecord]]:
        """count 4-byte non-branches, no branches at all."""
        code = encode_svl_nonbranch(4) * count
        records = [
            TraceRecord(TEST_BASE + 4 * i, 0, 4, BranchClass.NON_BRANCH, False)
            for i in range(count)
        ]
        return CodeImage({TEST_BASE: code}), records

    @staticmethod
    def create_call_loop(iterations: int = 50) -> Tuple[CodeImage, List[TraceRecord]]:
        """
        loop:  nop4; call fn; jmp loop      (fn at +0x40: nop2; ret)

        Every iteration commits nop4, call, nop2, ret, jmp.
        """
        fn = TEST_BASE + 0x40
        code = bytearray([0xFF]) * 0x80
        call_pc, jmp_pc = TEST_BASE + 4, TEST_BASE + 9
        code[0:4] = encode_svl_nonbranch(4)
        code[4:9] = encode_svl_branch(BranchClass.CALL, fn - (call_pc + 5))
        code[9:14] = encode_svl_branch(BranchClass.DIRECT_UNCOND, TEST_BASE - (jmp_pc + 5))
        code[0x40:0x42] = encode_svl_nonbranch(2)
        code[0x42:0x43] = encode_svl_branch(BranchClass.RETURN)

        records = []
        for _ in range(iterations):
            records += [
                TraceRecord(TEST_BASE, 0, 4, BranchClass.NON_BRANCH, False),
                TraceRecord(call_pc, fn, 5, BranchClass.CALL, True),
                TraceRecord(fn, 0, 2, BranchClass.NON_BRANCH, False),
                TraceRecord(fn + 2, call_pc + 5, 1, BranchClass.RETURN, True),
                TraceRecord(jmp_pc, TEST_BASE, 5, BranchClass.DIRECT_UNCOND, True),
            ]
        return CodeImage({TEST_BASE: bytes(code)}), records

    @staticmethod
    def create_line_crossing_jump(iterations: int = 10) -> Tuple[CodeImage, List[TraceRecord]]:
        """
        loop:  31 x nop2; jmp far         (the jmp covers bytes 62..66)
               call far                   (never executed, tail of the second line)
        far:   4 x nop4; jmp loop         (at +0x80)

        The taken jmp straddles the first line boundary, so the only tail
        branch sits in the second line.
        """
        far = TEST_BASE + 0x80
        code = bytearray([0xFF]) * 0xC0
        jmp_pc, call_pc, back_pc = TEST_BASE + 62, TEST_BASE + 67, far + 16
        code[0:62] = encode_svl_nonbranch(2) * 31
        code[62:67] = encode_svl_branch(BranchClass.DIRECT_UNCOND, far - (jmp_pc + 5))
        code[67:72] = encode_svl_branch(BranchClass.CALL, far - (call_pc + 5))
        code[0x80:0x90] = encode_svl_nonbranch(4) * 4
        code[0x90:0x95] = encode_svl_branch(BranchClass.DIRECT_UNCOND, TEST_BASE - (back_pc + 5))

        records = []
        for _ in range(iterations):
            records += [TraceRecord(TEST_BASE + 2 * i, 0, 2, BranchClass.NON_BRANCH, False) for i in range(31)]
            records.append(TraceRecord(jmp_pc, far, 5, BranchClass.DIRECT_UNCOND, True))
            records += [TraceRecord(far + 4 * i, 0, 4, BranchClass.NON_BRANCH, False) for i in range(4)]
            records.append(TraceRecord(back_pc, TEST_BASE, 5, BranchClass.DIRECT_UNCOND, True))
        return CodeImage({TEST_BASE: bytes(code)}), records


@pytest.fixture
def sample_records():
    """Fixture for three records covering a call and its return."""
    return TraceTestDataFactory.create_sample_records()


@pytest.fixture
def straight_line_program():
    """Fixture for a 1,000-instruction branch-free program."""
    return TraceTestDataFactory.create_straight_line(1000)


@pytest.fixture
def call_loop_program():
    """Fixture for a small loop that calls one function."""
    return TraceTestDataFactory.create_call_loop(50)
