"""
Tests for the decoupled front-end simulator, its accounting identities and
the shadow decoding trends it is built to show.
"""

import pytest

from src.core.config import SbdMode, SimConfig
from src.core.errors import SimulationError
from src.frontend.analysis import IDEAL_LABEL, ISO_LABEL, analyze, run_suite, suite_configs
from src.frontend.simulator import run_simulation
from src.isa.models import BranchClass
from src.memory.code_image import CodeImage
from src.predictors.audit import iso_storage_btb_entries
from src.trace.generator import generate_synthetic
from src.trace.models import TraceRecord
from src.trace.params import make_gen_params
from tests.fixtures.trace_test_data import (
    TEST_BASE,
    TraceTestDataFactory,
    call_loop_program,
    straight_line_program,
)


class TestSimulatorBasics:
    """Small programs with exactly known behaviour."""

    def test_empty_trace(self, sim_config):
        stats = run_simulation(CodeImage({TEST_BASE: bytes(64)}), [], sim_config)
        assert stats.retired == 0
        assert stats.cycles == 0

    @pytest.mark.parametrize("mode", [SbdMode.OFF, SbdMode.BOTH])
    def test_straight_line_has_no_resteers(self, straight_line_program, mode):
        image, records = straight_line_program
        stats = run_simulation(image, records, SimConfig(sbd_mode=mode))
        assert stats.retired == 1000
        assert stats.decode_resteers == 0
        assert stats.execute_resteers == 0
        assert stats.btb_misses == 0
        assert stats.sbb_insertions == 0

    def test_straight_line_cycle_count_independent_of_sbd(self, straight_line_program):
        image, records = straight_line_program
        off = run_simulation(image, records, SimConfig(sbd_mode=SbdMode.OFF))
        both = run_simulation(image, records, SimConfig(sbd_mode=SbdMode.BOTH))
        assert off.cycles == both.cycles

    def test_call_loop_misses_only_once(self, call_loop_program, sim_config):
        """
        CRITICAL TEST: Call, return and jump each miss the BTB on their
        first execution and hit afterwards.
        """
        image, records = call_loop_program
        stats = run_simulation(image, records, sim_config.model_copy(update={"sbd_mode": SbdMode.OFF}))
        assert stats.retired == len(records)
        assert stats.btb_misses == 3
        assert stats.decode_resteers == 3
        assert stats.execute_resteers == 0
        assert stats.btb_misses_by_class == {"call": 1, "direct_uncond": 1, "return": 1}

    def test_demand_accounting(self, call_loop_program, sim_config):
        image, records = call_loop_program
        stats = run_simulation(image, records, sim_config)
        assert stats.l1i_prefetch_misses + stats.l1i_wrong_path_misses >= 2
        assert stats.btb_misses_l1_resident + stats.btb_misses_l1_nonresident == stats.btb_misses

    def test_runs_are_deterministic(self, hot_cold_workload, small_sim_config):
        image, records = hot_cold_workload
        first = run_simulation(image, records, small_sim_config)
        second = run_simulation(image, records, small_sim_config)
        assert first == second

    def test_trace_that_leaves_the_code_path_fails(self, sim_config):
        image, records = TraceTestDataFactory.create_straight_line(8)
        broken = records[:2] + [TraceRecord(TEST_BASE + 16, 0, 4, BranchClass.NON_BRANCH, False)]
        with pytest.raises(SimulationError):
            run_simulation(image, broken, sim_config)

    def test_tail_follows_exit_branch_across_line_boundary(self, sim_config):
        """
        CRITICAL TEST: A taken exit branch that ends in the next line has
        its tail decoded from that line.
        """
        image, records = TraceTestDataFactory.create_line_crossing_jump(10)
        stats = run_simulation(image, records, sim_config.model_copy(update={"sbd_mode": SbdMode.TAIL}))
        assert stats.retired == len(records)
        assert stats.sbb_insertions_tail == 1
        assert stats.sbb_insertions_by_kind == {"call": 1}


class TestShadowDecodingEffects:
    """End-to-end behaviour on generated workloads."""

    @pytest.mark.parametrize("mode", list(SbdMode))
    def test_retired_count_independent_of_mode(self, hot_cold_workload, small_sim_config, mode):
        image, records = hot_cold_workload
        stats = run_simulation(image, records, small_sim_config.model_copy(update={"sbd_mode": mode}))
        assert stats.retired == len(records)
        assert sum(stats.btb_misses_by_class.values()) == stats.btb_misses
        assert sum(stats.btb_misses_by_region.values()) == stats.btb_misses
        if mode == SbdMode.OFF:
            assert stats.sbb_insertions == 0
            assert stats.sbb_hits == 0

    def test_both_reduces_btb_misses(self, hot_cold_workload, small_sim_config):
        image, records = hot_cold_workload
        off = run_simulation(image, records, small_sim_config.model_copy(update={"sbd_mode": SbdMode.OFF}))
        both = run_simulation(image, records, small_sim_config.model_copy(update={"sbd_mode": SbdMode.BOTH}))
        assert both.sbb_insertions > 0
        assert both.sbb_covered_misses > 0
        assert both.btb_misses < off.btb_misses

    def test_both_reduces_decode_resteers(self, hot_cold_workload, small_sim_config):
        """
        CRITICAL TEST: Targets supplied from the shadow buffers turn decode
        resteers into correct predictions, so Both never resteers more than Off.
        """
        image, records = hot_cold_workload
        off = run_simulation(image, records, small_sim_config.model_copy(update={"sbd_mode": SbdMode.OFF}))
        both = run_simulation(image, records, small_sim_config.model_copy(update={"sbd_mode": SbdMode.BOTH}))
        assert both.decode_resteers <= off.decode_resteers

    def test_unbounded_btb_misses_least(self, hot_cold_workload, small_sim_config):
        image, records = hot_cold_workload
        off = run_simulation(image, records, small_sim_config.model_copy(update={"sbd_mode": SbdMode.OFF}))
        ideal = run_simulation(image, records, small_sim_config.model_copy(
            update={"sbd_mode": SbdMode.OFF, "btb_unbounded": True}
        ))
        assert ideal.retired == len(records)
        assert ideal.btb_misses <= off.btb_misses

    def test_no_shadow_preset_inserts_nothing(self, no_shadow_workload, small_sim_config):
        """
        CRITICAL TEST: Without code in shadow regions the decoder finds nothing.
        """
        image, records = no_shadow_workload
        stats = run_simulation(image, records, small_sim_config.model_copy(update={"sbd_mode": SbdMode.BOTH}))
        assert stats.sbb_insertions == 0
        assert stats.sbb_covered_misses == 0

    def test_no_bogus_targets_on_svl(self, hot_cold_workload, small_sim_config):
        image, records = hot_cold_workload
        stats = run_simulation(image, records, small_sim_config.model_copy(update={"sbd_mode": SbdMode.BOTH}))
        assert stats.bogus_insertions == 0
        assert stats.bogus_supplied_targets == 0

    def test_bogus_insertions_rare_on_x86(self, hot_cold_x86_workload, small_sim_config):
        image, records = hot_cold_x86_workload
        config = SimConfig(btb_entries=512, usbb_entries=256, rsbb_entries=1024, sbd_mode="both", isa="x86")
        stats = run_simulation(image, records, config)
        assert stats.sbb_insertions > 0
        assert stats.bogus_insertions <= 0.01 * stats.sbb_insertions

    def test_invalidate_on_bogus_keeps_accounting(self, hot_cold_workload, small_sim_config):
        image, records = hot_cold_workload
        config = small_sim_config.model_copy(update={"invalidate_on_bogus": True})
        stats = run_simulation(image, records, config)
        assert stats.retired == len(records)

    def test_gshare_run_completes(self, hot_cold_workload, small_sim_config):
        image, records = hot_cold_workload
        config = SimConfig(**{**small_sim_config.model_dump(), "direction_predictor": "gshare"})
        stats = run_simulation(image, records, config)
        assert stats.retired == len(records)

    def test_suite_configurations(self, small_sim_config):
        runs = dict(suite_configs(small_sim_config))
        assert list(runs) == ["off", "head", "tail", "both", ISO_LABEL, IDEAL_LABEL]
        assert runs[ISO_LABEL].btb_entries == iso_storage_btb_entries(small_sim_config)
        assert runs[ISO_LABEL].sbd_mode == SbdMode.OFF
        assert runs[IDEAL_LABEL].btb_unbounded
        assert runs[IDEAL_LABEL].sbd_mode == SbdMode.OFF


@pytest.mark.slow
class TestTrendReproduction:
    """
    Directional results on a 500K-instruction hot-cold workload with a
    512-entry BTB.
    """

    @pytest.fixture(scope="class")
    def trend_runs(self):
        image, records = generate_synthetic(make_gen_params("hot-cold", instruction_count=500000))
        config = SimConfig(btb_entries=512, usbb_entries=256, rsbb_entries=1024)
        reports, _ = run_suite(image, records, config)
        return image, records, config, {report.label: report for report in reports}

    def test_misses_fall_on_resident_lines(self, trend_runs):
        image, records, config, _ = trend_runs
        assert analyze(image, records, config).l1_resident_share >= 0.5

    def test_each_region_helps(self, trend_runs):
        *_, runs = trend_runs
        assert runs["head"].btb_miss_mpki < runs["off"].btb_miss_mpki
        assert runs["tail"].btb_miss_mpki < runs["off"].btb_miss_mpki
        assert runs["both"].btb_miss_mpki <= min(runs["head"].btb_miss_mpki, runs["tail"].btb_miss_mpki)

    def test_decoder_idles_less(self, trend_runs):
        *_, runs = trend_runs
        assert runs["both"].decoder_idle_cycles < runs["off"].decoder_idle_cycles

    def test_enlarged_btb_helps(self, trend_runs):
        *_, runs = trend_runs
        assert runs[ISO_LABEL].btb_miss_mpki < runs["off"].btb_miss_mpki

    def test_unbounded_btb_bounds_storage_only_gains(self, trend_runs):
        """
        An infinite BTB leaves only first-touch misses, so no finite BTB
        without shadow decoding gets below it.
        """
        *_, runs = trend_runs
        assert runs[IDEAL_LABEL].btb_miss_mpki <= runs[ISO_LABEL].btb_miss_mpki
        assert runs[IDEAL_LABEL].btb_miss_mpki < runs["off"].btb_miss_mpki
