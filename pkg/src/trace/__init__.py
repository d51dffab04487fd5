"""
Committed-instruction traces: binary format, validation and the synthetic
workload generator.
"""

from .models import TraceRecord, TraceViolation, ViolationKind
from .format import read_trace, write_trace, encode_trace, decode_trace
from .validator import validate_trace
from .params import GenParams, PRESETS, make_gen_params
from .generator import body_slot_mix, generate_synthetic

__all__ = [
    "TraceRecord",
    "TraceViolation",
    "ViolationKind",
    "read_trace",
    "write_trace",
    "encode_trace",
    "decode_trace",
    "validate_trace",
    "GenParams",
    "PRESETS",
    "make_gen_params",
    "body_slot_mix",
    "generate_synthetic",
]
