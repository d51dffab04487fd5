"""
Command-line entry point for Skia experiments.

Exit codes: 0 success, 2 input or configuration error, 3 simulation or
internal failure.
"""

import functools
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

import click
import yaml

from src.core.config import SbdMode, get_settings, load_sim_config
from src.core.errors import ConfigurationError, GeneratorParameterError, InputError, SimulationError
from src.core.logging_setup import configure_logging
from src.frontend.analysis import analyze, run_suite
from src.frontend.metrics import compute_metrics, reports_frame, write_reports
from src.frontend.simulator import run_simulation
from src.isa.models import IsaKind
from src.memory.code_image import CodeImage
from src.predictors.audit import audit_bits, format_bit_audit
from src.shadow.decoder import ShadowBranchDecoder
from src.shadow.models import LINE_MASK, CacheLineView, IndexPolicy
from src.trace.format import read_trace, write_trace
from src.trace.generator import generate_synthetic
from src.trace.params import PRESETS, make_gen_params
from src.trace.validator import validate_trace
from src.cli.sweep import SWEEP_AXES, run_sweep

logger = logging.getLogger(__name__)

EXIT_INPUT_ERROR = 2
EXIT_INTERNAL_ERROR = 3

SBD_CHOICES = [mode.value for mode in SbdMode] + ["all"]
ISA_CHOICES = [isa.value for isa in IsaKind]
POLICY_CHOICES = [policy.value for policy in IndexPolicy]


def handle_errors(func):
    """Map the error hierarchy onto exit codes."""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except (InputError, ConfigurationError, GeneratorParameterError) as e:
            click.echo(f"Error: {e}", err=True)
            sys.exit(EXIT_INPUT_ERROR)
        except SimulationError as e:
            click.echo(f"Simulation failed: {e}", err=True)
            sys.exit(EXIT_INTERNAL_ERROR)
        except click.ClickException:
            raise
        except Exception as e:
            logger.exception("Unexpected failure")
            click.echo(f"Internal error: {e}", err=True)
            sys.exit(EXIT_INTERNAL_ERROR)

    return wrapper


def _parse_int(value: str, name: str) -> int:
    try:
        return int(value, 0)
    except ValueError:
        raise click.BadParameter(f"{value!r} is not an integer", param_hint=name)


def _load_inputs(image_path: str, trace_path: str, isa: IsaKind):
    """Load image and trace and refuse traces that do not match the image."""
    image = CodeImage.load(image_path)
    records = read_trace(trace_path)
    if not records:
        raise InputError(f"Trace {trace_path} contains no records")
    violations = validate_trace(image, records, isa)
    if violations:
        first = violations[0]
        raise InputError(
            f"Trace does not match image: {len(violations)} violations, first at record "
            f"{first.index} ({first.kind.value}: {first.message})"
        )
    return image, records


@click.group()
@click.option("--log-level", default=None, help="Logging level (default from SKIA_LOG_LEVEL or INFO)")
def cli(log_level: Optional[str]):
    """Shadow branch decoding front-end simulator."""
    configure_logging(log_level or get_settings().log_level)


@cli.command()
@click.option("--image", "image_path", required=True, help="Code image (.img.json)")
@click.option("--trace", "trace_path", required=True, help="Committed trace (.sbtrace)")
@click.option("--config", "config_path", default=None, help="JSON or YAML simulator config")
@click.option("--sbd", type=click.Choice(SBD_CHOICES), default=None,
              help="Shadow decoding mode; 'all' runs off/head/tail/both plus an iso-storage BTB")
@click.option("--out", required=True, help="Report path prefix; .json and .csv are written")
@handle_errors
def simulate(image_path, trace_path, config_path, sbd, out):
    """Simulate a trace and write JSON and CSV reports."""
    mode = None if sbd in (None, "all") else sbd
    config = load_sim_config(config_path, sbd_mode=mode)
    image, records = _load_inputs(image_path, trace_path, config.isa)

    if sbd == "all":
        reports, comparisons = run_suite(image, records, config)
    else:
        stats = run_simulation(image, records, config)
        reports, comparisons = [compute_metrics(stats, config.sbd_mode.value, config)], []

    write_reports(reports, out, comparisons)
    for report in reports:
        click.echo(
            f"{report.label}: btb_miss_mpki={report.btb_miss_mpki:.4f} "
            f"decode_resteers={report.decode_resteers} execute_resteers={report.execute_resteers} "
            f"decoder_idle_cycles={report.decoder_idle_cycles}"
        )


@cli.command("analyze")
@click.option("--image", "image_path", required=True, help="Code image (.img.json)")
@click.option("--trace", "trace_path", required=True, help="Committed trace (.sbtrace)")
@click.option("--config", "config_path", default=None, help="JSON or YAML simulator config")
@click.option("--out", default=None, help="Write the report as JSON here instead of stdout")
@handle_errors
def analyze_cmd(image_path, trace_path, config_path, out):
    """Report where BTB misses fall without shadow decoding."""
    config = load_sim_config(config_path)
    image, records = _load_inputs(image_path, trace_path, config.isa)
    report = analyze(image, records, config)
    text = json.dumps(report.model_dump(mode="json"), sort_keys=True, indent=2) + "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8")
        click.echo(f"Wrote opportunity report to {out}")
    else:
        click.echo(text, nl=False)


def _parse_settings(pairs: List[str]) -> Dict[str, Any]:
    values = {}
    for pair in pairs:
        if "=" not in pair:
            raise click.BadParameter(f"{pair!r} is not KEY=VALUE", param_hint="--set")
        key, raw = pair.split("=", 1)
        values[key.strip()] = yaml.safe_load(raw)
    return values


@cli.command()
@click.option("--preset", type=click.Choice(sorted(PRESETS)), default="hot-cold", show_default=True)
@click.option("--seed", type=int, default=None, help="Generator seed (SKIA_SEED, else preset default 7)")
@click.option("--instructions", type=int, default=None, help="Committed instructions to emit")
@click.option("--isa", type=click.Choice(ISA_CHOICES), default=None, help="Instruction set to emit")
@click.option("--set", "settings", multiple=True, help="Extra generator parameter as KEY=VALUE (YAML value)")
@click.option("--out-image", required=True, help="Code image output path")
@click.option("--out-trace", required=True, help="Trace output path")
@handle_errors
def gen(preset, seed, instructions, isa, settings, out_image, out_trace):
    """Generate a synthetic code image and committed trace."""
    overrides = _parse_settings(list(settings))
    if seed is None:
        env_settings = load_sim_config()
        if "seed" in env_settings.model_fields_set:
            seed = env_settings.seed
    params = make_gen_params(preset, seed=seed, instruction_count=instructions, isa=isa, **overrides)
    image, records = generate_synthetic(params)
    violations = validate_trace(image, records, params.isa)
    if violations:
        raise SimulationError(f"Generated trace fails validation: {violations[0].message}")
    image.save(out_image)
    write_trace(records, out_trace)
    click.echo(f"Generated {len(records)} instructions ({params.preset}, seed {params.seed}, {params.isa.value})")


def _parse_values(raw: str) -> List[float]:
    values = []
    for item in raw.split(","):
        item = item.strip()
        if not item:
            continue
        try:
            values.append(float(item))
        except ValueError as e:
            raise click.BadParameter(f"{item!r} is not a number", param_hint="--values") from e
    return values


@cli.command()
@click.option("--image", "image_path", required=True, help="Code image (.img.json)")
@click.option("--trace", "trace_path", required=True, help="Committed trace (.sbtrace)")
@click.option("--config", "config_path", default=None, help="JSON or YAML simulator config")
@click.option("--vary", required=True, help=f"Axis to sweep, one of {', '.join(SWEEP_AXES)} (AXIS or AXIS=v1,v2)")
@click.option("--values", "values_raw", default=None, help="Comma-separated values")
@click.option("--sbd", type=click.Choice([mode.value for mode in SbdMode]), default=None)
@click.option("--jobs", type=int, default=1, show_default=True, help="Worker processes")
@click.option("--out", required=True, help="Report path prefix; .json and .csv are written")
@handle_errors
def sweep(image_path, trace_path, config_path, vary, values_raw, sbd, jobs, out):
    """Run one simulation per value of an axis; one CSV row each."""
    axis, _, inline = vary.partition("=")
    values = _parse_values(inline if inline else (values_raw or ""))
    if not values:
        raise InputError("No sweep values given")
    config = load_sim_config(config_path, sbd_mode=sbd)
    _load_inputs(image_path, trace_path, config.isa)
    reports = run_sweep(Path(image_path), Path(trace_path), config, axis.strip(), values, jobs)
    write_reports(reports, out)
    click.echo(reports_frame(reports).to_csv(index=False, float_format="%.6f", lineterminator="\n"), nl=False)


def format_line_report(report, isa: IsaKind, policy: IndexPolicy) -> str:
    """Stable text rendering of a line decode."""
    line = report.line
    out = [
        f"line 0x{line.base_addr:x} isa={isa.value} entry_offset={line.entry_offset}",
        "bytes: " + " ".join(f"{b:02x}" for b in line.data),
    ]
    if line.entry_offset == 0:
        out.append("no head region")
    else:
        out.append("length vector: [" + ", ".join(str(n) for n in report.lengths) + "]")
        out.append("valid starts: {" + ", ".join(str(s) for s in report.valid_starts) + "}")
        picks = " ".join(
            f"{p.value}={'none' if report.selected[p] is None else report.selected[p]}" for p in IndexPolicy
        )
        out.append(f"index {picks}")
        out.append(f"head branches (policy={policy.value}):")
        out.extend(_format_branches(report.head_branches))
    if line.tail_start is not None:
        out.append(f"tail branches (tail_start={line.tail_start}):")
        out.extend(_format_branches(report.tail_branches))
    return "\n".join(out) + "\n"


def _format_branches(branches) -> List[str]:
    if not branches:
        return ["  none"]
    lines = []
    for sb in branches:
        target = "ras" if sb.target is None else f"0x{sb.target:x}"
        lines.append(f"  {sb.kind.value} pc=0x{sb.pc:x} offset={sb.line_offset} target={target}")
    return lines


@cli.command("decode-line")
@click.option("--image", "image_path", required=True, help="Code image (.img.json)")
@click.option("--line-addr", required=True, help="64-byte aligned line address (hex or decimal)")
@click.option("--entry-offset", type=click.IntRange(0, 63), default=0, show_default=True)
@click.option("--tail-start", type=click.IntRange(0, 64), default=None)
@click.option("--isa", type=click.Choice(ISA_CHOICES), default=None, help="Defaults to the configured ISA")
@click.option("--policy", type=click.Choice(POLICY_CHOICES), default=IndexPolicy.FIRST.value, show_default=True)
@click.option("--max-valid-paths", type=click.IntRange(1), default=6, show_default=True)
@handle_errors
def decode_line(image_path, line_addr, entry_offset, tail_start, isa, policy, max_valid_paths):
    """Print the shadow decode of one cache line."""
    base = _parse_int(line_addr, "--line-addr")
    if base & LINE_MASK:
        raise click.BadParameter(f"0x{base:x} is not 64-byte aligned", param_hint="--line-addr")
    isa_kind = IsaKind(isa) if isa else get_settings().isa
    index_policy = IndexPolicy(policy)
    image = CodeImage.load(image_path)
    line = CacheLineView(base, image.read_line(base), entry_offset, tail_start)
    decoder = ShadowBranchDecoder(isa_kind, index_policy, max_valid_paths)
    click.echo(format_line_report(decoder.explain(line), isa_kind, index_policy), nl=False)


@cli.command("audit-bits")
@click.option("--config", "config_path", default=None, help="JSON or YAML simulator config")
@click.option("--json", "as_json", is_flag=True, help="Print the audit as JSON")
@handle_errors
def audit_bits_cmd(config_path, as_json):
    """Print per-structure storage computed from entry layouts."""
    audit = audit_bits(load_sim_config(config_path))
    if as_json:
        click.echo(json.dumps(audit.model_dump(mode="json"), sort_keys=True, indent=2))
    else:
        click.echo(format_bit_audit(audit), nl=False)


def main():
    cli()


if __name__ == "__main__":
    main()
