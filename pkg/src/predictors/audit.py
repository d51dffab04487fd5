"""
Bit accounting for predictor storage.

Sizes are computed from each structure's entry layout, never from constants,
so changing a tag width or an entry count is reflected everywhere.
"""

from typing import Dict, List

from pydantic import BaseModel, Field

from src.core.config import SimConfig
from src.predictors.models import EntryLayout, btb_layout, rsbb_layout, usbb_layout
from src.shadow.models import LINE_SIZE


class StructureAudit(BaseModel):
    """Storage of one predictor structure."""
    name: str
    entries: int
    ways: int
    sets: int
    entry_bits: int
    total_bits: int
    kilobytes: float
    fields: Dict[str, int] = Field(default_factory=dict)


class BitAudit(BaseModel):
    """Storage report for a configuration."""
    structures: List[StructureAudit]
    sbb_total_bits: int
    iso_storage_btb_entries: int
    l1i_size_bytes: int
    l1i_ways: int
    l1i_sets: int


def audit_structure(layout: EntryLayout, entries: int, ways: int) -> StructureAudit:
    total_bits = layout.total_bits * entries
    return StructureAudit(
        name=layout.name,
        entries=entries,
        ways=ways,
        sets=entries // ways,
        entry_bits=layout.total_bits,
        total_bits=total_bits,
        kilobytes=total_bits / 8 / 1024,
        fields=dict(layout.fields),
    )


def iso_storage_btb_entries(config: SimConfig) -> int:
    """
    BTB size with the same storage as BTB plus both SBBs.

    The SBB bits are converted into whole BTB entries and rounded down to a
    multiple of the associativity.
    """
    sbb_bits = (usbb_layout(config.sbb_tag_bits).total_bits * config.usbb_entries
                + rsbb_layout(config.sbb_tag_bits).total_bits * config.rsbb_entries)
    extra = sbb_bits // btb_layout(config.btb_tag_bits).total_bits
    extra -= extra % config.ways
    return config.btb_entries + extra


def audit_bits(config: SimConfig) -> BitAudit:
    structures = [
        audit_structure(btb_layout(config.btb_tag_bits), config.btb_entries, config.ways),
        audit_structure(usbb_layout(config.sbb_tag_bits), config.usbb_entries, config.ways),
        audit_structure(rsbb_layout(config.sbb_tag_bits), config.rsbb_entries, config.ways),
    ]
    return BitAudit(
        structures=structures,
        sbb_total_bits=structures[1].total_bits + structures[2].total_bits,
        iso_storage_btb_entries=iso_storage_btb_entries(config),
        l1i_size_bytes=config.l1i_size_bytes,
        l1i_ways=config.l1i_ways,
        l1i_sets=config.l1i_size_bytes // LINE_SIZE // config.l1i_ways,
    )


def format_bit_audit(audit: BitAudit) -> str:
    """Fixed-layout text rendering used by the audit-bits command."""
    lines = [f"{'structure':<8} {'entries':>8} {'ways':>5} {'sets':>6} {'bits/entry':>10} "
             f"{'total_bits':>11} {'KB':>10}"]
    for s in audit.structures:
        lines.append(
            f"{s.name:<8} {s.entries:>8} {s.ways:>5} {s.sets:>6} {s.entry_bits:>10} "
            f"{s.total_bits:>11} {s.kilobytes:>10.4f}"
        )
    lines.append("")
    lines.append("entry layouts:")
    for s in audit.structures:
        fields = " ".join(f"{name}={bits}" for name, bits in s.fields.items())
        lines.append(f"  {s.name}: {fields} ({s.entry_bits} bits)")
    lines.append("")
    lines.append(f"SBB total bits: {audit.sbb_total_bits}")
    lines.append(f"iso-storage BTB entries: {audit.iso_storage_btb_entries}")
    lines.append(f"L1-I: {audit.l1i_size_bytes} bytes, {audit.l1i_ways} ways, {audit.l1i_sets} sets")
    return "\n".join(lines) + "\n"
