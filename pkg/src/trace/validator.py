"""
Trace validation against a code image.

Violations are returned as data so callers can report all of them at once.
"""

import logging
from typing import List, Sequence

from src.isa.decoder import branch_target, decode_at
from src.isa.models import DIRECT_CLASSES, MAX_INSTRUCTION_LENGTH, BranchClass, IsaKind
from src.memory.code_image import CodeImage
from src.trace.models import TraceRecord, TraceViolation, ViolationKind

logger = logging.getLogger(__name__)

ALWAYS_TAKEN_CLASSES = frozenset({
    BranchClass.DIRECT_UNCOND,
    BranchClass.CALL,
    BranchClass.RETURN,
    BranchClass.INDIRECT_UNCOND,
    BranchClass.INDIRECT_CALL,
})


def _check_record(index: int, rec: TraceRecord) -> List[TraceViolation]:
    problems = []
    if not 1 <= rec.length <= MAX_INSTRUCTION_LENGTH:
        problems.append(f"length {rec.length} outside 1..{MAX_INSTRUCTION_LENGTH}")
    if rec.branch_class == BranchClass.NON_BRANCH and (rec.taken or rec.target):
        problems.append("non-branch with a target or taken flag")
    if rec.branch_class in ALWAYS_TAKEN_CLASSES and not rec.taken:
        problems.append(f"{rec.branch_class.name} recorded as not taken")
    return [TraceViolation(index, ViolationKind.RECORD, p) for p in problems]


def validate_trace(image: CodeImage, records: Sequence[TraceRecord], isa: IsaKind) -> List[TraceViolation]:
    """
    Check every record against the image and its successor.

    Each record's bytes must decode to the recorded length and class, a
    direct branch's target must match its encoding, and the next record
    must start at the taken target or at pc + length.

    Returns:
        All violations, ordered by record index
    """
    violations: List[TraceViolation] = []
    for index, rec in enumerate(records):
        violations.extend(_check_record(index, rec))

        if not image.is_mapped(rec.pc):
            violations.append(TraceViolation(index, ViolationKind.UNMAPPED, f"pc 0x{rec.pc:x} is unmapped"))
        else:
            data = image.read(rec.pc, MAX_INSTRUCTION_LENGTH)
            decoded = decode_at(data, 0, isa)
            if decoded is None:
                violations.append(TraceViolation(index, ViolationKind.DECODE, f"no instruction at 0x{rec.pc:x}"))
            else:
                if decoded.length != rec.length:
                    violations.append(TraceViolation(
                        index, ViolationKind.LENGTH,
                        f"recorded length {rec.length}, decoded {decoded.length}"
                    ))
                if decoded.branch_class != rec.branch_class:
                    violations.append(TraceViolation(
                        index, ViolationKind.CLASS,
                        f"recorded {rec.branch_class.name}, decoded {decoded.branch_class.name}"
                    ))
                elif decoded.branch_class in DIRECT_CLASSES:
                    expected = branch_target(rec.pc, decoded)
                    if expected != rec.target:
                        violations.append(TraceViolation(
                            index, ViolationKind.TARGET,
                            f"recorded target 0x{rec.target:x}, encoded 0x{expected:x}"
                        ))

        if index + 1 < len(records):
            successor = records[index + 1].pc
            if successor != rec.next_pc:
                violations.append(TraceViolation(
                    index, ViolationKind.CONTROL_FLOW,
                    f"successor at 0x{successor:x}, expected 0x{rec.next_pc:x}"
                ))

    if violations:
        logger.warning(f"Trace validation found {len(violations)} violations")
    return violations
