"""
Synthetic workload generator.

Builds a code image in which cold functions share cache lines with hot
functions, then executes it to produce the committed trace. Layout rules:

- A driver loop calls every hot function round-robin.
- Each hot function starts on a fresh line; cold functions occupy the bytes
  before its entry (head) and after its return (tail).
- Guard branches in hot bodies rarely jump to stubs `call cold; jmp back`
  placed right after the return.
- Every line begins at an instruction boundary. Instructions that would
  cross a line end are preceded by executed filler, so the smallest valid
  head start of any line is always the true instruction layout.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.core.errors import GeneratorParameterError
from src.isa.models import DIRECT_CLASSES, BranchClass, IsaKind
from src.isa.svl import encode_svl_branch, encode_svl_nonbranch
from src.isa.x86_subset import encode_x86_branch, encode_x86_nonbranch
from src.memory.code_image import CodeImage, CodeLayout
from src.shadow.models import LINE_SIZE
from src.trace.models import TraceRecord
from src.trace.params import BRANCH_MIX_KINDS, GenParams

logger = logging.getLogger(__name__)

PAD_BYTE = 0xFF
COLD_FILLER_MAX = 4


@dataclass
class _Instr:
    pc: int
    length: int
    branch_class: BranchClass
    target_label: Optional[str] = None
    target: int = 0


@dataclass
class _Routine:
    """Straight-line code ending in a return (cold and leaf functions).

    A CALL in the body runs callee before the body continues.
    """
    body: List[_Instr] = field(default_factory=list)
    ret: Optional[_Instr] = None
    callee: Optional["_Routine"] = None


@dataclass
class _Stub:
    call: _Instr
    jump: _Instr
    cold_id: int


@dataclass
class _HotFunction:
    steps: List[Tuple[str, _Instr, int]] = field(default_factory=list)
    stubs: List[_Stub] = field(default_factory=list)
    ret: Optional[_Instr] = None


def apportion(weights: Dict[str, float], total: int) -> Dict[str, int]:
    """Largest-remainder split of total slots by weight."""
    weight_sum = sum(weights.values())
    quotas = {kind: total * w / weight_sum for kind, w in weights.items()}
    counts = {kind: int(q) for kind, q in quotas.items()}
    leftover = total - sum(counts.values())
    by_remainder = sorted(quotas, key=lambda kind: (-(quotas[kind] - counts[kind]), kind))
    for kind in by_remainder[:leftover]:
        counts[kind] += 1
    return counts


class _Assembler:
    """Appends encoded instructions and resolves label targets afterwards."""

    def __init__(self, isa: IsaKind, base: int, rng: np.random.Generator):
        self.isa = isa
        self.base = base
        self.rng = rng
        self.buf = bytearray()
        self.instrs: List[_Instr] = []
        self.labels: Dict[str, int] = {}
        self.max_filler = 8 if isa == IsaKind.SVL else 7

    @property
    def pc(self) -> int:
        return self.base + len(self.buf)

    @property
    def line_offset(self) -> int:
        return self.pc % LINE_SIZE

    def label(self, name: str) -> None:
        self.labels[name] = self.pc

    def _encode_branch(self, branch_class: BranchClass, disp: int) -> bytes:
        try:
            if self.isa == IsaKind.SVL:
                return encode_svl_branch(branch_class, disp)
            return encode_x86_branch(branch_class, disp)
        except OverflowError as e:
            raise GeneratorParameterError(
                f"{branch_class.name} displacement {disp} does not fit its encoding"
            ) from e

    def _encode_filler(self, length: int) -> bytes:
        if self.isa == IsaKind.SVL:
            operands = self.rng.integers(0xF0, 0x100, size=length - 1).tolist()
            return encode_svl_nonbranch(length, operands)
        return encode_x86_nonbranch(length)

    def branch_length(self, branch_class: BranchClass) -> int:
        return len(self._encode_branch(branch_class, 0))

    def _append(self, data: bytes, branch_class: BranchClass, target_label: Optional[str] = None) -> _Instr:
        instr = _Instr(self.pc, len(data), branch_class, target_label)
        if branch_class in DIRECT_CLASSES and target_label is None:
            instr.target = instr.pc + instr.length
        self.buf += data
        self.instrs.append(instr)
        return instr

    def filler(self, length: int) -> _Instr:
        return self._append(self._encode_filler(length), BranchClass.NON_BRANCH)

    def branch(self, branch_class: BranchClass, target_label: Optional[str] = None) -> _Instr:
        return self._append(self._encode_branch(branch_class, 0), branch_class, target_label)

    def fill_executed(self, nbytes: int) -> List[_Instr]:
        fillers = []
        while nbytes > 0:
            length = min(nbytes, self.max_filler)
            fillers.append(self.filler(length))
            nbytes -= length
        return fillers

    def ensure_fits(self, length: int) -> List[_Instr]:
        """Executed filler to the line end when `length` bytes would cross it."""
        room = LINE_SIZE - self.line_offset
        return self.fill_executed(room) if length > room else []

    def pad_to_line(self) -> None:
        if self.line_offset:
            self.buf += bytes([PAD_BYTE]) * (LINE_SIZE - self.line_offset)

    def resolve(self) -> None:
        for instr in self.instrs:
            if instr.target_label is None:
                continue
            instr.target = self.labels[instr.target_label]
            disp = instr.target - (instr.pc + instr.length)
            offset = instr.pc - self.base
            self.buf[offset:offset + instr.length] = self._encode_branch(instr.branch_class, disp)


class SyntheticWorkload:
    """Lays out one workload and executes it into a committed trace."""

    def __init__(self, params: GenParams):
        self.params = params
        self.rng = np.random.default_rng(params.seed)
        self.asm = _Assembler(params.isa, params.base_address, self.rng)
        self.driver: List[Tuple[str, _Instr, int]] = []
        self.hot: List[_HotFunction] = []
        self.cold: Dict[int, _Routine] = {}
        self.leaves: List[_Routine] = []
        self.body_slots: Dict[int, str] = {}

    # Layout

    def _plan(self) -> None:
        p = self.params
        hot_count, cold_count = p.hot_count, p.cold_count
        if hot_count == 0:
            raise GeneratorParameterError(
                f"{p.function_count} functions at hot_fraction={p.hot_fraction} leave no hot function"
            )
        if p.base_address % LINE_SIZE:
            raise GeneratorParameterError(f"base_address 0x{p.base_address:x} is not line aligned")

        self.guards = p.guard_sites if cold_count > 0 else 0
        if p.guard_sites and not cold_count:
            logger.warning("No cold functions exist; guard sites disabled")

        self.cold_lengths = self.rng.integers(1, COLD_FILLER_MAX + 1, size=max(cold_count, 1)).tolist()
        placement = self.rng.permutation(cold_count).tolist()
        c = p.colocation
        self.head_cold: List[List[int]] = []
        self.tail_cold: List[List[int]] = []
        for i in range(hot_count):
            group = placement[i * c:(i + 1) * c]
            self.head_cold.append(group[:c // 2])
            self.tail_cold.append(group[c // 2:])
        self.region_cold = placement[hot_count * c:]
        stub_order = self.rng.permutation(cold_count).tolist() if cold_count else []
        self.stub_targets = [
            [stub_order[(i * self.guards + k) % cold_count] for k in range(self.guards)]
            for i in range(hot_count)
        ]

        counts = apportion(p.branch_mix, hot_count * p.instructions_per_function)
        kinds = [kind for kind in BRANCH_MIX_KINDS for _ in range(counts[kind])]
        self.slot_kinds = [kinds[j] for j in self.rng.permutation(len(kinds))]

        leaf_calls = p.leaf_calls_per_function
        self.leaf_depths = [[1] * leaf_calls for _ in range(hot_count)]
        if leaf_calls and p.max_call_depth > 1:
            depths = list(p.call_depth_weights)
            weights = np.array([p.call_depth_weights[d] for d in depths])
            drawn = self.rng.choice(depths, size=(hot_count, leaf_calls), p=weights / weights.sum())
            self.leaf_depths = drawn.tolist()

    def _emit_driver(self) -> None:
        asm, p = self.asm, self.params
        asm.label("loop")
        call_len = asm.branch_length(BranchClass.CALL)
        calls = [(BranchClass.CALL, f"hot_{i}", i) for i in range(p.hot_count)]
        for branch_class, label, index in calls + [(BranchClass.DIRECT_UNCOND, "loop", -1)]:
            if p.isolate_driver_calls:
                gap = LINE_SIZE - asm.line_offset - call_len
                if gap < 0:
                    gap += LINE_SIZE
                fillers = asm.fill_executed(gap)
            else:
                fillers = asm.ensure_fits(call_len)
            self.driver.extend(("plain", f, 0) for f in fillers)
            step = "call" if branch_class == BranchClass.CALL else "jump"
            self.driver.append((step, asm.branch(branch_class, label), index))
        asm.pad_to_line()

    def _emit_routine(self, label: str, filler_length: int,
                      callee: Optional[Tuple[str, _Routine]] = None) -> _Routine:
        """Filler, an optional call, then return. Line crossings are bridged with executed filler."""
        asm = self.asm
        routine = _Routine()
        asm.label(label)
        routine.body.extend(asm.ensure_fits(filler_length))
        routine.body.append(asm.filler(filler_length))
        if callee is not None:
            callee_label, routine.callee = callee
            routine.body.extend(asm.ensure_fits(asm.branch_length(BranchClass.CALL)))
            routine.body.append(asm.branch(BranchClass.CALL, callee_label))
        routine.ret = asm.branch(BranchClass.RETURN)
        return routine

    def _emit_packed_cold(self, cold_id: int) -> None:
        self.cold[cold_id] = self._emit_routine(f"cold_{cold_id}", self.cold_lengths[cold_id])

    def _body_plan(self, i: int) -> List[Tuple[str, int]]:
        p = self.params
        ipf = p.instructions_per_function
        kinds = self.slot_kinds[i * ipf:(i + 1) * ipf]
        inserts: Dict[int, List[Tuple[str, int]]] = {}
        for k in range(self.guards):
            inserts.setdefault((k + 1) * ipf // (self.guards + 1), []).append(("guard", k))
        leaf_calls = p.leaf_calls_per_function
        for j in range(leaf_calls):
            inserts.setdefault((2 * j + 1) * ipf // (2 * leaf_calls), []).append(("leaf", j))
        plan = []
        for idx in range(ipf + 1):
            plan.extend(inserts.get(idx, []))
            if idx < ipf:
                plan.append(("slot", BRANCH_MIX_KINDS.index(kinds[idx])))
        return plan

    def _emit_hot(self, i: int) -> None:
        asm, p = self.asm, self.params
        fn = _HotFunction()
        asm.pad_to_line()

        # Step 1: Head shadow region
        for cold_id in self.head_cold[i]:
            self._emit_packed_cold(cold_id)
        asm.label(f"hot_{i}")

        # Step 2: Body
        cond_len = asm.branch_length(BranchClass.DIRECT_COND)
        for item, arg in self._body_plan(i):
            if item == "slot":
                kind = BRANCH_MIX_KINDS[arg]
                if kind == "nonbranch":
                    length = int(self.rng.integers(1, asm.max_filler + 1))
                elif kind == "cond":
                    length = cond_len
                else:
                    length = asm.branch_length(BranchClass.DIRECT_UNCOND)
                fn.steps.extend(("plain", f, 0) for f in asm.ensure_fits(length))
                if kind == "nonbranch":
                    instr = asm.filler(length)
                    fn.steps.append(("plain", instr, 0))
                elif kind == "cond":
                    instr = asm.branch(BranchClass.DIRECT_COND)
                    fn.steps.append(("cond", instr, 0))
                else:
                    instr = asm.branch(BranchClass.DIRECT_UNCOND)
                    fn.steps.append(("plain", instr, 0))
                self.body_slots[instr.pc] = kind
            elif item == "guard":
                fn.steps.extend(("plain", f, 0) for f in asm.ensure_fits(cond_len))
                fn.steps.append(("guard", asm.branch(BranchClass.DIRECT_COND, f"stub_{i}_{arg}"), arg))
                asm.label(f"resume_{i}_{arg}")
            else:
                call_len = asm.branch_length(BranchClass.CALL)
                fn.steps.extend(("plain", f, 0) for f in asm.ensure_fits(call_len))
                leaf_id = (i + arg) % p.leaf_functions
                depth = self.leaf_depths[i][arg]
                call = asm.branch(BranchClass.CALL, f"leaf_{depth}_{leaf_id}")
                fn.steps.append(("leaf", call, (depth - 1) * p.leaf_functions + leaf_id))

        # Step 3: Return, stubs and tail shadow region in one line
        stub_len = asm.branch_length(BranchClass.CALL) + asm.branch_length(BranchClass.DIRECT_UNCOND)
        tail_len = 1 + self.guards * stub_len + sum(self.cold_lengths[j] + 1 for j in self.tail_cold[i])
        if tail_len > LINE_SIZE:
            raise GeneratorParameterError(f"Return group of {tail_len} bytes does not fit in one line")
        if asm.line_offset + tail_len > LINE_SIZE:
            fn.steps.extend(("plain", f, 0) for f in asm.fill_executed(LINE_SIZE - asm.line_offset))
        fn.ret = asm.branch(BranchClass.RETURN)
        for k, cold_id in enumerate(self.stub_targets[i]):
            asm.label(f"stub_{i}_{k}")
            call = asm.branch(BranchClass.CALL, f"cold_{cold_id}")
            jump = asm.branch(BranchClass.DIRECT_UNCOND, f"resume_{i}_{k}")
            fn.stubs.append(_Stub(call, jump, cold_id))
        for cold_id in self.tail_cold[i]:
            self._emit_packed_cold(cold_id)
        asm.pad_to_line()
        self.hot.append(fn)

    def layout(self) -> CodeImage:
        """Emit driver, leaf functions, hot functions and leftover cold functions."""
        p = self.params
        self._plan()
        self._emit_driver()
        if p.leaf_calls_per_function:
            # self.leaves[(depth - 1) * leaf_functions + j] is leaf_{depth}_{j}
            for depth in range(1, p.max_call_depth + 1):
                for j in range(p.leaf_functions):
                    length = int(self.rng.integers(1, COLD_FILLER_MAX + 1))
                    callee = None
                    if depth > 1:
                        below = self.leaves[(depth - 2) * p.leaf_functions + j]
                        callee = (f"leaf_{depth - 1}_{j}", below)
                    self.leaves.append(self._emit_routine(f"leaf_{depth}_{j}", length, callee))
            self.asm.pad_to_line()
        for i in range(p.hot_count):
            self._emit_hot(i)
        for cold_id in self.region_cold:
            self._emit_packed_cold(cold_id)
        self.asm.pad_to_line()
        self.asm.resolve()

        image = CodeImage({p.base_address: bytes(self.asm.buf)})
        image.layout = CodeLayout(
            instruction_starts=frozenset(instr.pc for instr in self.asm.instrs),
            body_slots=dict(self.body_slots),
        )
        logger.info(
            f"Laid out {p.hot_count} hot / {p.cold_count} cold functions in "
            f"{len(self.asm.buf)} bytes ({p.isa.value})"
        )
        return image

    # Execution

    def _run_routine(self, out: List[TraceRecord], routine: _Routine, return_to: int) -> None:
        for instr in routine.body:
            if instr.branch_class == BranchClass.CALL:
                out.append(TraceRecord(instr.pc, instr.target, instr.length, BranchClass.CALL, True))
                self._run_routine(out, routine.callee, instr.pc + instr.length)
                continue
            out.append(TraceRecord(instr.pc, 0, instr.length, instr.branch_class, False))
        ret = routine.ret
        out.append(TraceRecord(ret.pc, return_to, ret.length, ret.branch_class, True))

    def _run_hot(self, out: List[TraceRecord], fn: _HotFunction, return_to: int) -> None:
        p = self.params
        for step, instr, arg in fn.steps:
            if step == "plain":
                taken = instr.branch_class != BranchClass.NON_BRANCH
                out.append(TraceRecord(instr.pc, instr.target, instr.length, instr.branch_class, taken))
            elif step == "cond":
                taken = bool(self.rng.random() < p.body_cond_taken_probability)
                out.append(TraceRecord(instr.pc, instr.target, instr.length, instr.branch_class, taken))
            elif step == "guard":
                fire = bool(self.rng.random() < p.cold_call_probability)
                out.append(TraceRecord(instr.pc, instr.target, instr.length, instr.branch_class, fire))
                if fire:
                    stub = fn.stubs[arg]
                    out.append(TraceRecord(stub.call.pc, stub.call.target, stub.call.length, BranchClass.CALL, True))
                    self._run_routine(out, self.cold[stub.cold_id], stub.jump.pc)
                    out.append(TraceRecord(
                        stub.jump.pc, stub.jump.target, stub.jump.length, BranchClass.DIRECT_UNCOND, True
                    ))
            else:
                out.append(TraceRecord(instr.pc, instr.target, instr.length, BranchClass.CALL, True))
                self._run_routine(out, self.leaves[arg], instr.pc + instr.length)
        out.append(TraceRecord(fn.ret.pc, return_to, fn.ret.length, BranchClass.RETURN, True))

    def execute(self) -> List[TraceRecord]:
        n = self.params.instruction_count
        out: List[TraceRecord] = []
        while len(out) < n:
            for step, instr, index in self.driver:
                if step == "plain":
                    out.append(TraceRecord(instr.pc, 0, instr.length, instr.branch_class, False))
                    continue
                out.append(TraceRecord(instr.pc, instr.target, instr.length, instr.branch_class, True))
                if step == "call":
                    self._run_hot(out, self.hot[index], instr.pc + instr.length)
                if len(out) >= n:
                    break
        return out[:n]


def generate_synthetic(params: GenParams) -> Tuple[CodeImage, List[TraceRecord]]:
    """
    Generate a code image and its committed trace.

    Deterministic in params (including seed).

    Raises:
        GeneratorParameterError: If the parameters cannot be laid out
    """
    workload = SyntheticWorkload(params)
    image = workload.layout()
    records = workload.execute()
    logger.info(f"Generated {len(records)} committed instructions (preset={params.preset}, seed={params.seed})")
    return image, records


def body_slot_mix(image: CodeImage, records: Sequence[TraceRecord]) -> Dict[str, float]:
    """Dynamic share of each body slot kind among executed body slots."""
    if image.layout is None:
        raise ValueError("Code image carries no generator layout")
    counts = {kind: 0 for kind in BRANCH_MIX_KINDS}
    slots = image.layout.body_slots
    for rec in records:
        kind = slots.get(rec.pc)
        if kind is not None:
            counts[kind] += 1
    total = sum(counts.values())
    return {kind: (count / total if total else 0.0) for kind, count in counts.items()}
