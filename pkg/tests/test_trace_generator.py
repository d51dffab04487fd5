"""
Tests for generator parameters and the synthetic workload generator.
"""

import pytest

from src.core.errors import GeneratorParameterError
from src.isa.models import BranchClass, IsaKind
from src.shadow.decoder import decode_head, decode_tail
from src.shadow.models import LINE_MASK, LINE_SIZE, CacheLineView, IndexPolicy
from src.trace.generator import apportion, body_slot_mix, generate_synthetic
from src.trace.params import PRESETS, GenParams, make_gen_params
from src.trace.validator import validate_trace


def head_views(image, records):
    """Line views for every taken target that lands inside a line."""
    views = {}
    for rec in records:
        if rec.taken and rec.target & LINE_MASK:
            base = rec.target & ~LINE_MASK
            views[(base, rec.target & LINE_MASK)] = CacheLineView(
                base, image.read_line(base), rec.target & LINE_MASK
            )
    return list(views.values())


def max_call_nesting(records):
    """Deepest count of outstanding calls along the trace."""
    depth = deepest = 0
    for rec in records:
        if rec.branch_class == BranchClass.CALL:
            depth += 1
            deepest = max(deepest, depth)
        elif rec.branch_class == BranchClass.RETURN:
            depth -= 1
    return deepest


class TestGenParams:
    """Presets and parameter validation."""

    def test_presets_build(self):
        for preset in PRESETS:
            params = make_gen_params(preset)
            assert params.preset == preset

    def test_overrides_skip_none(self):
        params = make_gen_params("hot-cold", seed=None, instruction_count=500)
        assert params.seed == 7
        assert params.instruction_count == 500

    def test_unknown_preset(self):
        with pytest.raises(GeneratorParameterError):
            make_gen_params("lukewarm")

    def test_invalid_values(self):
        with pytest.raises(GeneratorParameterError):
            make_gen_params("hot-cold", hot_fraction=1.5)
        with pytest.raises(GeneratorParameterError):
            make_gen_params("hot-cold", colocation=5)
        with pytest.raises(GeneratorParameterError):
            make_gen_params("hot-cold", instruction_count=0)
        with pytest.raises(GeneratorParameterError):
            make_gen_params("hot-cold", branch_mix={"indirect": 1.0})

    def test_branch_mix_normalized_to_all_kinds(self):
        params = GenParams(branch_mix={"cond": 2.0})
        assert params.branch_mix == {"nonbranch": 0.0, "cond": 2.0, "uncond": 0.0}

    def test_hot_and_cold_counts(self):
        params = GenParams(function_count=640, hot_fraction=0.2)
        assert (params.hot_count, params.cold_count) == (128, 512)

    def test_apportion_largest_remainder(self):
        assert apportion({"a": 1.0, "b": 1.0, "c": 1.0}, 10) == {"a": 4, "b": 3, "c": 3}
        assert sum(apportion({"a": 0.6, "b": 0.25, "c": 0.15}, 1537).values()) == 1537


class TestGenerateSynthetic:
    """Layout, execution and the guarantees the simulator relies on."""

    def test_deterministic_in_seed(self):
        params = make_gen_params("hot-cold", instruction_count=5000)
        image_a, records_a = generate_synthetic(params)
        image_b, records_b = generate_synthetic(params)
        assert image_a.segments == image_b.segments
        assert records_a == records_b

    def test_seed_changes_output(self):
        _, records_a = generate_synthetic(make_gen_params("hot-cold", instruction_count=5000, seed=1))
        _, records_b = generate_synthetic(make_gen_params("hot-cold", instruction_count=5000, seed=2))
        assert records_a != records_b

    def test_exact_instruction_count(self, hot_cold_workload):
        _, records = hot_cold_workload
        assert len(records) == 20000

    @pytest.mark.parametrize("preset", sorted(PRESETS))
    @pytest.mark.parametrize("isa", [IsaKind.SVL, IsaKind.X86_SUBSET, IsaKind.X86_SUBSET_32])
    def test_output_passes_validation(self, preset, isa):
        """
        CRITICAL TEST: Generator output has zero validation violations.
        """
        image, records = generate_synthetic(make_gen_params(preset, instruction_count=8000, isa=isa))
        assert validate_trace(image, records, isa) == []

    def test_no_hot_function_is_infeasible(self):
        with pytest.raises(GeneratorParameterError):
            generate_synthetic(make_gen_params("hot-cold", hot_fraction=0.0))

    def test_unaligned_base_is_infeasible(self):
        with pytest.raises(GeneratorParameterError):
            generate_synthetic(make_gen_params("hot-cold", base_address=0x400010))

    def test_cold_code_lives_in_shadow_regions(self, hot_cold_workload):
        image, records = hot_cold_workload
        views = head_views(image, records)
        assert views
        found = sum(len(decode_head(view, IsaKind.SVL)) for view in views)
        assert found > 0

    @pytest.mark.parametrize("workload", ["hot_cold_workload", "hot_cold_x86_workload"])
    def test_first_index_is_the_true_layout(self, workload, request):
        """
        CRITICAL TEST: Head decoding under the first-index policy only ever
        reports real instruction starts.
        """
        image, records = request.getfixturevalue(workload)
        isa = IsaKind.SVL if workload == "hot_cold_workload" else IsaKind.X86_SUBSET
        starts = image.layout.instruction_starts
        for view in head_views(image, records):
            for sb in decode_head(view, isa, IndexPolicy.FIRST):
                assert sb.pc in starts

    def test_no_shadow_preset_has_no_shadow_code(self, no_shadow_workload):
        image, records = no_shadow_workload
        assert head_views(image, records) == []
        for rec in records:
            if rec.taken:
                end = (rec.pc & LINE_MASK) + rec.length
                if end < LINE_SIZE:
                    base = rec.pc & ~LINE_MASK
                    view = CacheLineView(base, image.read_line(base), tail_start=end)
                    assert decode_tail(view, IsaKind.SVL) == []

    def test_cold_functions_recur(self, hot_cold_workload):
        _, records = hot_cold_workload
        returns = [rec.pc for rec in records if rec.branch_class == BranchClass.RETURN]
        assert len(set(returns)) > 128

    @pytest.mark.slow
    def test_branch_mix_within_two_percent(self):
        mix = {"nonbranch": 0.6, "cond": 0.25, "uncond": 0.15}
        params = make_gen_params("hot-cold", instruction_count=100000, branch_mix=mix)
        image, records = generate_synthetic(params)
        measured = body_slot_mix(image, records)
        for kind, weight in mix.items():
            assert abs(measured[kind] - weight) <= 0.02

    def test_return_heavy_preset_calls_leaves(self):
        image, records = generate_synthetic(make_gen_params("return-heavy", instruction_count=5000))
        calls = sum(rec.branch_class == BranchClass.CALL for rec in records)
        returns = sum(rec.branch_class == BranchClass.RETURN for rec in records)
        assert calls > 0
        assert abs(calls - returns) <= 2

    @pytest.mark.parametrize("weights,expected", [(None, 2), ({3: 1.0}, 4), ({1: 1.0, 2: 1.0}, 3)])
    def test_call_depth_weights_set_nesting(self, weights, expected):
        """
        CRITICAL TEST: A depth-d leaf site nests d leaf frames under the hot
        function, and the trace stays valid.
        """
        params = make_gen_params("return-heavy", instruction_count=5000, call_depth_weights=weights)
        image, records = generate_synthetic(params)
        assert validate_trace(image, records, params.isa) == []
        assert max_call_nesting(records) == expected

    def test_call_depth_weights_validated(self):
        with pytest.raises(GeneratorParameterError):
            make_gen_params("return-heavy", call_depth_weights={5: 1.0})
        with pytest.raises(GeneratorParameterError):
            make_gen_params("return-heavy", call_depth_weights={2: 0.0})
        assert GenParams(call_depth_weights={2: 0.0, 1: 3}).max_call_depth == 1
