"""
Tests for the skia command-line interface.
"""

import json

import pandas as pd
import pytest
from click.testing import CliRunner

from src.cli.main import cli
from src.memory.code_image import CodeImage
from tests.fixtures.isa_test_data import FIG_LINE_BASE, IsaTestDataFactory

WORKED_LINE_REPORT = (
    "line 0x1000 isa=x86-32 entry_offset=8\n"
    "bytes: 45 31 c0 e9 f9 03 00 00" + " ff" * 56 + "\n"
    "length vector: [1, 2, 0, 5, 1, 0, 0, 0]\n"
    "valid starts: {0, 1, 3}\n"
    "index first=0 zero=0 merge=3\n"
    "head branches (policy=first):\n"
    "  uncond pc=0x1003 offset=3 target=0x1401\n"
)


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def worked_image(tmp_path):
    path = tmp_path / "worked.img.json"
    CodeImage({FIG_LINE_BASE: IsaTestDataFactory.create_worked_line_bytes()}).save(path)
    return str(path)


@pytest.fixture
def generated(runner, tmp_path):
    image = str(tmp_path / "w.img.json")
    trace = str(tmp_path / "w.sbtrace")
    result = runner.invoke(cli, [
        "gen", "--preset", "hot-cold", "--seed", "3", "--instructions", "4000",
        "--out-image", image, "--out-trace", trace,
    ])
    assert result.exit_code == 0, result.output
    return image, trace


class TestDecodeLine:
    """decode-line output."""

    def test_worked_line_golden_output(self, runner, worked_image):
        """
        CRITICAL TEST: The ambiguous x86 line renders exactly.
        """
        result = runner.invoke(cli, [
            "decode-line", "--image", worked_image, "--isa", "x86-32",
            "--line-addr", "0x1000", "--entry-offset", "8",
        ])
        assert result.exit_code == 0, result.stderr
        assert result.stdout == WORKED_LINE_REPORT

    def test_merge_policy_header(self, runner, worked_image):
        result = runner.invoke(cli, [
            "decode-line", "--image", worked_image, "--isa", "x86-32",
            "--line-addr", "4096", "--entry-offset", "8", "--policy", "merge",
        ])
        assert result.exit_code == 0
        assert "head branches (policy=merge):\n  uncond pc=0x1003 offset=3 target=0x1401\n" in result.stdout

    def test_entry_offset_zero_has_no_head(self, runner, worked_image):
        result = runner.invoke(cli, [
            "decode-line", "--image", worked_image, "--isa", "x86-32", "--line-addr", "0x1000",
        ])
        assert result.exit_code == 0
        assert "no head region" in result.stdout
        assert "length vector" not in result.stdout

    def test_tail_section(self, runner, worked_image):
        result = runner.invoke(cli, [
            "decode-line", "--image", worked_image, "--isa", "x86-32",
            "--line-addr", "0x1000", "--tail-start", "8",
        ])
        assert result.exit_code == 0
        assert result.stdout.endswith("tail branches (tail_start=8):\n  none\n")

    def test_unmapped_line(self, runner, worked_image):
        result = runner.invoke(cli, ["decode-line", "--image", worked_image, "--line-addr", "0x8000"])
        assert result.exit_code == 2
        assert "Error:" in result.stderr

    def test_unaligned_line(self, runner, worked_image):
        result = runner.invoke(cli, ["decode-line", "--image", worked_image, "--line-addr", "0x1004"])
        assert result.exit_code == 2

    def test_missing_image(self, runner, tmp_path):
        result = runner.invoke(cli, ["decode-line", "--image", str(tmp_path / "nope.json"), "--line-addr", "0"])
        assert result.exit_code == 2


class TestAuditBits:
    """audit-bits output."""

    def test_default_audit(self, runner):
        result = runner.invoke(cli, ["audit-bits"])
        assert result.exit_code == 0
        assert "iso-storage BTB entries: 9476" in result.stdout
        assert "entry layouts:" in result.stdout

    def test_json_audit(self, runner):
        result = runner.invoke(cli, ["audit-bits", "--json"])
        assert result.exit_code == 0
        assert json.loads(result.stdout)["iso_storage_btb_entries"] == 9476

    def test_config_file(self, runner, tmp_path):
        config = tmp_path / "small.yaml"
        config.write_text("btb_entries: 512\nusbb_entries: 256\nrsbb_entries: 1024\n")
        result = runner.invoke(cli, ["audit-bits", "--config", str(config), "--json"])
        assert result.exit_code == 0
        assert json.loads(result.stdout)["iso_storage_btb_entries"] == 1028

    def test_invalid_config(self, runner, tmp_path):
        config = tmp_path / "bad.yaml"
        config.write_text("btb_entries: 1000\nways: 3\n")
        result = runner.invoke(cli, ["audit-bits", "--config", str(config)])
        assert result.exit_code == 2


class TestGenAndSimulate:
    """gen, simulate and analyze end to end."""

    def test_gen_writes_both_files(self, runner, tmp_path):
        result = runner.invoke(cli, [
            "gen", "--preset", "no-shadow", "--instructions", "1000",
            "--out-image", str(tmp_path / "i.json"), "--out-trace", str(tmp_path / "t.sbtrace"),
        ])
        assert result.exit_code == 0
        assert result.stdout.startswith("Generated 1000 instructions (no-shadow, seed 7, svl)")
        assert (tmp_path / "i.json").exists()
        assert (tmp_path / "t.sbtrace").exists()

    def test_gen_seed_from_environment(self, runner, tmp_path):
        """
        CRITICAL TEST: SKIA_SEED drives the generator when --seed is absent.
        """
        def run(name, seed_env, *extra):
            trace = tmp_path / f"{name}.sbtrace"
            result = runner.invoke(cli, [
                "gen", "--instructions", "2000", *extra,
                "--out-image", str(tmp_path / f"{name}.json"), "--out-trace", str(trace),
            ], env={"SKIA_SEED": seed_env})
            assert result.exit_code == 0, result.stderr
            return result.stdout, trace.read_bytes()

        out_a, trace_a = run("a", "99")
        _, trace_b = run("b", "12345")
        _, trace_c = run("c", "99")
        assert "seed 99," in out_a
        assert trace_a == trace_c
        assert trace_a != trace_b

        out_flag, _ = run("d", "99", "--seed", "5")
        assert "seed 5," in out_flag

    def test_gen_rejects_bad_parameter(self, runner, tmp_path):
        result = runner.invoke(cli, [
            "gen", "--set", "hot_fraction=0", "--instructions", "1000",
            "--out-image", str(tmp_path / "i.json"), "--out-trace", str(tmp_path / "t.sbtrace"),
        ])
        assert result.exit_code == 2

    @pytest.mark.parametrize("mode", ["off", "both"])
    def test_simulate_single_mode(self, runner, generated, tmp_path, mode):
        image, trace = generated
        out = tmp_path / f"run-{mode}"
        result = runner.invoke(cli, ["simulate", "--image", image, "--trace", trace, "--sbd", mode, "--out", str(out)])
        assert result.exit_code == 0, result.stderr
        assert result.stdout.startswith(f"{mode}: btb_miss_mpki=")
        frame = pd.read_csv(out.with_suffix(".csv"))
        assert list(frame["label"]) == [mode]
        assert frame.loc[0, "retired"] == 4000

    def test_simulate_all_runs_suite(self, runner, generated, tmp_path):
        image, trace = generated
        out = tmp_path / "suite"
        result = runner.invoke(cli, ["simulate", "--image", image, "--trace", trace, "--sbd", "all", "--out", str(out)])
        assert result.exit_code == 0, result.stderr
        labels = [line.split(":")[0] for line in result.stdout.splitlines()]
        assert labels == ["off", "head", "tail", "both", "iso-btb", "ideal-btb"]
        payload = json.loads(out.with_suffix(".json").read_text())
        assert len(payload["comparisons"]) == 5

    def test_simulate_is_deterministic(self, runner, generated, tmp_path):
        """
        CRITICAL TEST: Identical invocations give byte-identical output.
        """
        image, trace = generated
        outputs = []
        for name in ("a", "b"):
            out = tmp_path / name
            result = runner.invoke(cli, ["simulate", "--image", image, "--trace", trace, "--sbd", "both",
                                         "--out", str(out)])
            assert result.exit_code == 0
            outputs.append((result.stdout, out.with_suffix(".csv").read_bytes(),
                            out.with_suffix(".json").read_bytes()))
        assert outputs[0] == outputs[1]

    def test_missing_trace(self, runner, generated, tmp_path):
        image, _ = generated
        result = runner.invoke(cli, ["simulate", "--image", image, "--trace", str(tmp_path / "missing.sbtrace"),
                                     "--out", str(tmp_path / "x")])
        assert result.exit_code == 2
        assert "not found" in result.stderr

    def test_corrupt_trace(self, runner, generated, tmp_path):
        image, _ = generated
        bad = tmp_path / "bad.sbtrace"
        bad.write_bytes(b"NOPE" + bytes(12))
        result = runner.invoke(cli, ["simulate", "--image", image, "--trace", str(bad), "--out", str(tmp_path / "x")])
        assert result.exit_code == 2

    def test_analyze_to_stdout(self, runner, generated):
        image, trace = generated
        result = runner.invoke(cli, ["analyze", "--image", image, "--trace", trace])
        assert result.exit_code == 0
        report = json.loads(result.stdout)
        assert 0.0 <= report["l1_resident_share"] <= 1.0
        assert 0.0 <= report["shadow_share"] <= 1.0


class TestSweep:
    """sweep rows and argument errors."""

    def test_three_values_three_rows(self, runner, generated, tmp_path):
        image, trace = generated
        out = tmp_path / "sweep"
        result = runner.invoke(cli, [
            "sweep", "--image", image, "--trace", trace, "--vary", "btb_entries",
            "--values", "512,1024,2048", "--out", str(out),
        ])
        assert result.exit_code == 0, result.stderr
        frame = pd.read_csv(out.with_suffix(".csv"))
        assert list(frame["btb_entries"]) == [512, 1024, 2048]
        assert list(frame["label"]) == ["btb_entries=512", "btb_entries=1024", "btb_entries=2048"]
        assert len(result.stdout.strip().splitlines()) == 4

    def test_inline_values(self, runner, generated, tmp_path):
        image, trace = generated
        result = runner.invoke(cli, [
            "sweep", "--image", image, "--trace", trace, "--vary", "sbb_scale=0,1",
            "--out", str(tmp_path / "s"),
        ])
        assert result.exit_code == 0, result.stderr
        frame = pd.read_csv(tmp_path / "s.csv")
        assert list(frame["usbb_entries"]) == [0, 768]

    def test_empty_values(self, runner, generated, tmp_path):
        image, trace = generated
        result = runner.invoke(cli, [
            "sweep", "--image", image, "--trace", trace, "--vary", "btb_entries", "--values", "",
            "--out", str(tmp_path / "s"),
        ])
        assert result.exit_code == 2

    def test_unknown_axis(self, runner, generated, tmp_path):
        image, trace = generated
        result = runner.invoke(cli, [
            "sweep", "--image", image, "--trace", trace, "--vary", "colour", "--values", "1",
            "--out", str(tmp_path / "s"),
        ])
        assert result.exit_code == 2
