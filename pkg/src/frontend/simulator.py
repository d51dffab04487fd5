"""
Cycle-approximate decoupled front end with shadow branch decoding.

Each cycle runs, in order:
    1. SBB insertions whose delay has elapsed
    2. A due execute-stage resteer
    3. Decode: up to decode_width instructions; on-path ones commit here
    4. Fetch: the FTQ head moves to the decode queue once its lines are ready
    5. IAG: one predicted basic block enters the FTQ and its lines are prefetched

The trace supplies the correct path. After the IAG's first divergence from
it, the IAG follows its own predictions through the code image until the
diverging instruction is caught at decode or execute.
"""

import heapq
import logging
from collections import deque
from typing import Deque, Dict, List, Optional, Sequence, Tuple

from src.core.config import SbdMode, SimConfig
from src.core.errors import InvariantViolation, SimulationError, UnmappedAddressError
from src.isa.decoder import ADDRESS_MASK, decode_at
from src.isa.models import MAX_INSTRUCTION_LENGTH, BranchClass, DecodedInstr
from src.memory.code_image import CodeImage
from src.memory.l1i_cache import AccessKind, L1ICache
from src.predictors.btb import BranchTargetBuffer
from src.predictors.direction import make_direction_predictor
from src.predictors.models import BtbBranchType
from src.predictors.ras import ReturnAddressStack
from src.predictors.sbb import ShadowBranchBuffer
from src.shadow.decoder import ShadowBranchDecoder, classify_region
from src.shadow.models import LINE_MASK, LINE_SIZE, Origin, Region, ShadowBranch, ShadowBranchKind
from src.trace.models import TraceRecord
from src.frontend.models import (
    FetchedInstr,
    FtqEntry,
    PredictionSource,
    ResteerStage,
    SimCounters,
    Stats,
)

logger = logging.getLogger(__name__)

_CALL_CLASSES = (BranchClass.CALL, BranchClass.INDIRECT_CALL)


class FrontEndSimulator:
    """
    One simulation run. Owns every structure exclusively; not reusable.
    """

    def __init__(self, image: CodeImage, records: Sequence[TraceRecord], config: SimConfig):
        self.image = image
        self.records = records
        self.config = config

        self.btb = BranchTargetBuffer(
            config.btb_entries, config.ways, config.btb_tag_bits, unbounded=config.btb_unbounded
        )
        self.sbb = ShadowBranchBuffer(config.usbb_entries, config.rsbb_entries, config.ways, config.sbb_tag_bits)
        self.ras = ReturnAddressStack(config.ras_depth)
        self.direction = make_direction_predictor(config)
        self.l1i = L1ICache(config.l1i_size_bytes, config.l1i_ways, config.l1i_miss_latency)
        self.sbd = ShadowBranchDecoder(config.isa, config.index_policy, config.max_valid_paths)
        self.counters = SimCounters()

        self.ftq: Deque[FtqEntry] = deque()
        self.decode_queue: Deque[FetchedInstr] = deque()
        self.pending_sbb: List[Tuple[int, int, ShadowBranch]] = []
        self._sbb_seq = 0
        self.pending_resteer: Optional[Tuple[int, FetchedInstr]] = None

        # IAG state
        self.iag_pc = records[0].pc if records else 0
        self.iag_on_path = True
        self.iag_index = 0
        self.iag_ready_at = 0
        self.iag_halted = False
        self.iag_start_is_target = True

        self._lines: Dict[int, bytes] = {}
        self._wrong_path_decodes: Dict[int, Optional[DecodedInstr]] = {}
        self._starts = image.layout.instruction_starts if image.layout is not None else None

        # Last committed visit per line, for head/tail classification of misses
        self._line_history: Dict[int, Tuple[int, Optional[int]]] = {}
        self._visit_line: Optional[int] = None
        self._visit_entry = 0
        self._visit_tail: Optional[int] = None
        self._prev_taken = True
        self._last_retire_cycle = 0

    def run(self) -> Stats:
        """
        Simulate until every trace record has committed.

        Raises:
            SimulationError: If the trace and image disagree or the front end stalls
        """
        total = len(self.records)
        if total == 0:
            return self._build_stats()

        logger.info(
            f"Simulating {total} instructions: sbd={self.config.sbd_mode.value}, "
            f"btb={self.config.btb_entries}, usbb={self.config.usbb_entries}, rsbb={self.config.rsbb_entries}"
        )
        now = 0
        while self.counters.retired < total:
            self._apply_sbb_insertions(now)
            if self.pending_resteer is not None and self.pending_resteer[0] <= now:
                _, instr = self.pending_resteer
                self._resteer(instr, now)
            self._decode(now)
            self._fetch(now)
            self._iag(now)
            if now - self._last_retire_cycle > self.config.max_cycles_per_record:
                raise SimulationError(
                    f"No instruction committed for {self.config.max_cycles_per_record} cycles",
                    pc=self.records[self.counters.retired].pc,
                )
            now += 1

        self.counters.cycles = now
        stats = self._build_stats()
        self._check_identities(stats)
        return stats

    # Stage 1: SBD insertions

    def _apply_sbb_insertions(self, now: int) -> None:
        c = self.counters
        while self.pending_sbb and self.pending_sbb[0][0] <= now:
            _, _, sb = heapq.heappop(self.pending_sbb)
            partition = self.sbb.rsbb if sb.kind == ShadowBranchKind.RETURN else self.sbb.usbb
            if not partition.enabled:
                continue
            if not self.sbb.insert(sb):
                c.sbb_refreshes += 1
                continue
            if sb.origin == Origin.HEAD:
                c.sbb_insertions_head += 1
            else:
                c.sbb_insertions_tail += 1
            c.bump(c.sbb_insertions_by_kind, sb.kind.value)
            if self._starts is not None and sb.pc not in self._starts:
                c.bogus_insertions += 1

    def _schedule_sbd(self, entry: FtqEntry, now: int, line_ready: Dict[int, int]) -> None:
        mode: SbdMode = self.config.sbd_mode
        delay = self.config.sbd_delay
        c = self.counters

        if mode.decodes_head and entry.start_is_target:
            offset = entry.start_pc & LINE_MASK
            if offset > 0:
                line = entry.start_pc - offset
                branches = self.sbd.decode_head(line, self._line_bytes(line), offset)
                c.sbd_head_decodes += 1
                self._queue_insertions(branches, max(now, line_ready[line]) + delay)

        if mode.decodes_tail and entry.exit_taken:
            last = entry.instrs[-1]
            end = last.pc + last.length
            # an exit branch that straddles a line boundary leaves its tail in the next line
            line = (end - 1) & ~LINE_MASK
            tail_start = end - line
            if tail_start < LINE_SIZE:
                branches = self.sbd.decode_tail(line, self._line_bytes(line), tail_start)
                c.sbd_tail_decodes += 1
                self._queue_insertions(branches, max(now, line_ready[line]) + delay)

    def _queue_insertions(self, branches: Sequence[ShadowBranch], due: int) -> None:
        for sb in branches:
            heapq.heappush(self.pending_sbb, (due, self._sbb_seq, sb))
            self._sbb_seq += 1

    # Stage 2/3: resteers, decode and commit

    def _resteer(self, instr: FetchedInstr, resume_at: int) -> None:
        """Flush everything younger than instr and restart the IAG on the correct path."""
        rec = self.records[instr.trace_index]
        if instr.source == PredictionSource.SBB:
            self.counters.bogus_supplied_targets += 1
            if self.config.invalidate_on_bogus:
                self.sbb.invalidate(instr.sbb_source, instr.pc)

        self.ftq.clear()
        self.decode_queue.clear()
        self.pending_resteer = None

        self.ras.restore(instr.ras_checkpoint)
        if rec.branch_class in _CALL_CLASSES:
            self.ras.push(rec.pc + rec.length)
        elif rec.branch_class == BranchClass.RETURN:
            self.ras.pop()

        self.iag_pc = rec.next_pc
        self.iag_on_path = True
        self.iag_index = instr.trace_index + 1
        self.iag_ready_at = resume_at
        self.iag_halted = False
        self.iag_start_is_target = rec.taken

    def _decode(self, now: int) -> None:
        c = self.counters
        decoded = 0
        while decoded < self.config.decode_width and self.decode_queue and self.decode_queue[0].avail_at <= now:
            instr = self.decode_queue.popleft()
            decoded += 1
            if not instr.on_path:
                c.wrong_path_instructions += 1
                continue

            self._commit(instr, now)
            if instr.resteer == ResteerStage.DECODE:
                c.decode_resteers += 1
                c.bump(c.resteers_by_class, instr.branch_class.name.lower())
                self._resteer(instr, now + self.config.decode_resteer_repair)
                break
            if instr.resteer == ResteerStage.EXECUTE:
                c.execute_resteers += 1
                c.bump(c.resteers_by_class, instr.branch_class.name.lower())
                self.pending_resteer = (now + self.config.execute_resteer_penalty, instr)

        if decoded == 0:
            c.decoder_idle_cycles += 1

    def _track_visit(self, rec: TraceRecord) -> None:
        line = rec.pc & ~LINE_MASK
        if line != self._visit_line or self._prev_taken:
            if self._visit_line is not None:
                self._line_history[self._visit_line] = (self._visit_entry, self._visit_tail)
            self._visit_line = line
            self._visit_entry = rec.pc & LINE_MASK
            self._visit_tail = None
        if rec.taken:
            end = (rec.pc & LINE_MASK) + rec.length
            self._visit_tail = end if end < LINE_SIZE else None
        self._prev_taken = rec.taken

    def _region_of(self, pc: int) -> Region:
        history = self._line_history.get(pc & ~LINE_MASK)
        if history is None:
            return Region.UNSEEN
        return classify_region(pc & LINE_MASK, *history)

    def _commit(self, instr: FetchedInstr, now: int) -> None:
        c = self.counters
        rec = self.records[instr.trace_index]
        c.retired += 1
        self._last_retire_cycle = now
        self._track_visit(rec)

        if rec.branch_class == BranchClass.DIRECT_COND:
            self.direction.update(rec.pc, rec.taken)

        if rec.taken:
            if instr.source == PredictionSource.SBB and instr.resteer is None:
                c.sbb_covered_misses += 1
            elif not instr.btb_hit:
                c.btb_misses += 1
                if instr.line_resident:
                    c.btb_misses_l1_resident += 1
                c.bump(c.btb_misses_by_class, rec.branch_class.name.lower())
                c.bump(c.btb_misses_by_region, self._region_of(rec.pc).value)
            self.btb.update(rec.pc, rec.branch_class, rec.target)

        if instr.source == PredictionSource.SBB and instr.resteer is None:
            self.sbb.mark_retired(instr.sbb_source, instr.pc)
            c.sbb_hits_committed += 1

        interval = self.config.progress_interval
        if interval and c.retired % interval == 0:
            logger.info(f"Committed {c.retired}/{len(self.records)} instructions at cycle {now}")

    # Stage 4: fetch

    def _fetch(self, now: int) -> None:
        if not self.ftq:
            return
        entry = self.ftq[0]
        if not entry.demand_issued:
            kind = AccessKind.WRONG_PATH_PREFETCH if entry.wrong_path else AccessKind.DEMAND
            ready = now
            for line in entry.lines:
                ready = max(ready, self.l1i.access(line, kind, now).ready_at)
            entry.ready_at = ready
            entry.demand_issued = True
        if entry.ready_at > now:
            return
        if len(self.decode_queue) + len(entry.instrs) > self.config.decode_queue_entries:
            return

        self.ftq.popleft()
        avail = now + self.config.fetch_to_decode_depth
        for instr in entry.instrs:
            instr.avail_at = avail
            self.decode_queue.append(instr)

    # Stage 5: IAG

    def _iag(self, now: int) -> None:
        if now < self.iag_ready_at or self.iag_halted or len(self.ftq) >= self.config.ftq_entries:
            return
        if self.iag_on_path and self.iag_index >= len(self.records):
            return
        entry = self._form_block(now)
        if entry is None:
            return
        self.ftq.append(entry)

        kind = AccessKind.WRONG_PATH_PREFETCH if entry.wrong_path else AccessKind.PREFETCH
        line_ready = {}
        for line in entry.lines:
            line_ready[line] = self.l1i.access(line, kind, now).ready_at
        if self.config.sbd_mode != SbdMode.OFF:
            self._schedule_sbd(entry, now, line_ready)

    def _form_block(self, now: int) -> Optional[FtqEntry]:
        """Predict one basic block starting at the IAG pc."""
        instrs: List[FetchedInstr] = []
        pc = self.iag_pc
        start_pc = pc
        start_is_target = self.iag_start_is_target
        wrong_path = not self.iag_on_path
        taken = False

        while len(instrs) < self.config.max_block_instructions:
            rec = None
            if self.iag_on_path:
                if self.iag_index >= len(self.records):
                    break
                rec = self.records[self.iag_index]
                if rec.pc != pc:
                    raise SimulationError("Committed path does not continue at the predicted pc", pc=pc)
                length, branch_class, truth = rec.length, rec.branch_class, rec.taken
            else:
                decoded = self._decode_wrong_path(pc)
                if decoded is None:
                    self.iag_halted = True
                    break
                length, branch_class, truth = decoded.length, decoded.branch_class, None

            instr = FetchedInstr(pc, length, branch_class, self.iag_index if rec is not None else None)
            instr.line_resident = self.l1i.is_resident(pc & ~LINE_MASK, now)
            checkpoint = self._predict(instr, truth)
            next_pc = instr.predicted_target if instr.predicted_taken else pc + length

            if rec is not None:
                if next_pc != rec.next_pc:
                    instr.resteer = self._resteer_stage(rec, instr)
                    instr.ras_checkpoint = checkpoint if checkpoint is not None else self.ras.snapshot()
                    self.iag_on_path = False
                self.iag_index += 1

            instrs.append(instr)
            pc = next_pc & ADDRESS_MASK
            if instr.predicted_taken:
                taken = True
                break

        if not instrs:
            return None
        self.iag_pc = pc
        self.iag_start_is_target = taken

        last = instrs[-1]
        first_line = start_pc & ~LINE_MASK
        last_line = (last.pc + last.length - 1) & ~LINE_MASK
        lines = tuple(range(first_line, last_line + LINE_SIZE, LINE_SIZE))
        return FtqEntry(start_pc, instrs, lines, start_is_target, wrong_path)

    def _predict(self, instr: FetchedInstr, truth: Optional[bool]) -> Optional[Tuple[int, ...]]:
        """
        Fill in instr's prediction, applying its RAS effect.

        Returns:
            The RAS state from before the prediction if the RAS changed, else None
        """
        pc = instr.pc
        return_address = pc + instr.length
        checkpoint = None

        entry = self.btb.lookup(pc)
        if entry is not None:
            instr.btb_hit = True
            instr.source = PredictionSource.BTB
            if entry.branch_type == BtbBranchType.COND:
                instr.predicted_taken = self.direction.predict(pc, truth)
                instr.predicted_target = entry.target
            elif entry.branch_type == BtbBranchType.CALL:
                checkpoint = self.ras.snapshot()
                self.ras.push(return_address)
                instr.predicted_taken, instr.predicted_target = True, entry.target
            elif entry.is_return:
                checkpoint = self.ras.snapshot()
                target = self.ras.pop()
                if target is not None:
                    instr.predicted_taken, instr.predicted_target = True, target
            else:
                instr.predicted_taken, instr.predicted_target = True, entry.target
            return checkpoint

        if self.config.sbd_mode == SbdMode.OFF:
            return None
        prediction = self.sbb.lookup(pc)
        if prediction is None:
            return None

        self.counters.sbb_hits += 1
        checkpoint = self.ras.snapshot()
        if prediction.kind == ShadowBranchKind.RETURN:
            target = self.ras.pop()
            if target is None:
                return None
        else:
            target = prediction.target
            if prediction.kind == ShadowBranchKind.CALL:
                self.ras.push(return_address)
        instr.source = PredictionSource.SBB
        instr.sbb_source = prediction.source
        instr.predicted_taken, instr.predicted_target = True, target
        return checkpoint

    @staticmethod
    def _resteer_stage(rec: TraceRecord, instr: FetchedInstr) -> ResteerStage:
        """Where a wrong prediction for rec is first caught."""
        cls = rec.branch_class
        if cls in (BranchClass.NON_BRANCH, BranchClass.DIRECT_UNCOND, BranchClass.CALL):
            return ResteerStage.DECODE
        if cls == BranchClass.RETURN:
            return ResteerStage.EXECUTE if instr.predicted_taken else ResteerStage.DECODE
        if cls == BranchClass.DIRECT_COND and rec.taken and instr.predicted_taken:
            return ResteerStage.DECODE
        return ResteerStage.EXECUTE

    # Helpers

    def _line_bytes(self, line: int) -> bytes:
        data = self._lines.get(line)
        if data is None:
            try:
                data = self.image.read_line(line)
            except UnmappedAddressError as e:
                raise SimulationError(str(e), pc=line) from e
            self._lines[line] = data
        return data

    def _decode_wrong_path(self, pc: int) -> Optional[DecodedInstr]:
        if pc in self._wrong_path_decodes:
            return self._wrong_path_decodes[pc]
        try:
            decoded = decode_at(self.image.read(pc, MAX_INSTRUCTION_LENGTH), 0, self.config.isa)
        except UnmappedAddressError:
            decoded = None
        self._wrong_path_decodes[pc] = decoded
        return decoded

    def _build_stats(self) -> Stats:
        c, l1 = self.counters, self.l1i
        return Stats(
            retired=c.retired,
            cycles=c.cycles,
            decoder_idle_cycles=c.decoder_idle_cycles,
            wrong_path_instructions=c.wrong_path_instructions,
            l1i_demand_hits=l1.hits[AccessKind.DEMAND],
            l1i_demand_misses=l1.misses[AccessKind.DEMAND],
            l1i_prefetch_hits=l1.hits[AccessKind.PREFETCH],
            l1i_prefetch_misses=l1.misses[AccessKind.PREFETCH],
            l1i_wrong_path_hits=l1.hits[AccessKind.WRONG_PATH_PREFETCH],
            l1i_wrong_path_misses=l1.misses[AccessKind.WRONG_PATH_PREFETCH],
            btb_misses=c.btb_misses,
            btb_misses_l1_resident=c.btb_misses_l1_resident,
            btb_misses_l1_nonresident=c.btb_misses - c.btb_misses_l1_resident,
            btb_misses_by_class=dict(sorted(c.btb_misses_by_class.items())),
            btb_misses_by_region=dict(sorted(c.btb_misses_by_region.items())),
            sbb_covered_misses=c.sbb_covered_misses,
            sbb_insertions=c.sbb_insertions_head + c.sbb_insertions_tail,
            sbb_insertions_head=c.sbb_insertions_head,
            sbb_insertions_tail=c.sbb_insertions_tail,
            sbb_insertions_by_kind=dict(sorted(c.sbb_insertions_by_kind.items())),
            sbb_refreshes=c.sbb_refreshes,
            sbb_hits=c.sbb_hits,
            sbb_hits_committed=c.sbb_hits_committed,
            bogus_supplied_targets=c.bogus_supplied_targets,
            bogus_insertions=c.bogus_insertions,
            decode_resteers=c.decode_resteers,
            execute_resteers=c.execute_resteers,
            resteers_by_class=dict(sorted(c.resteers_by_class.items())),
            sbd_head_decodes=c.sbd_head_decodes,
            sbd_tail_decodes=c.sbd_tail_decodes,
        )

    def _check_identities(self, stats: Stats) -> None:
        """
        Raises:
            InvariantViolation: If the run's accounting does not add up
        """
        errors = []
        if stats.retired != len(self.records):
            errors.append(f"retired {stats.retired} != {len(self.records)} records")
        if sum(stats.btb_misses_by_class.values()) != stats.btb_misses:
            errors.append("per-class BTB misses do not sum to the total")
        if sum(stats.btb_misses_by_region.values()) != stats.btb_misses:
            errors.append("per-region BTB misses do not sum to the total")
        if self.config.sbd_mode == SbdMode.OFF and (stats.sbb_insertions or stats.sbb_hits):
            errors.append("SBB activity with shadow decoding off")
        if errors:
            raise InvariantViolation(f"Statistics identities broken: {'; '.join(errors)}")


def run_simulation(image: CodeImage, records: Sequence[TraceRecord], config: SimConfig) -> Stats:
    """Simulate records over image under config and return the run's statistics."""
    return FrontEndSimulator(image, records, config).run()
