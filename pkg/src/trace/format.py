"""
Binary trace format (little-endian):

    magic "SBTR" | u32 version = 1 | u64 record count
    then count packed 19-byte records: pc u64, target u64, len u8, class u8, flags u8

flags bit 0 is the taken bit.
"""

import logging
from pathlib import Path
from typing import Iterable, List, Union

import numpy as np

from src.core.errors import BadMagicError, InputError, TraceFormatError, TraceVersionError, TruncatedTraceError
from src.isa.models import BranchClass
from src.trace.models import TAKEN_FLAG, TraceRecord

logger = logging.getLogger(__name__)

TRACE_MAGIC = b"SBTR"
TRACE_VERSION = 1

HEADER_DTYPE = np.dtype([("magic", "S4"), ("version", "<u4"), ("count", "<u8")])
RECORD_DTYPE = np.dtype([
    ("pc", "<u8"),
    ("target", "<u8"),
    ("len", "u1"),
    ("class", "u1"),
    ("flags", "u1"),
])

_MAX_CLASS = max(BranchClass)


def records_to_array(records: Iterable[TraceRecord]) -> np.ndarray:
    """
    Pack records into a structured array.

    Raises:
        ValueError: If a field does not fit its on-disk width
    """
    records = list(records)
    array = np.zeros(len(records), dtype=RECORD_DTYPE)
    for i, rec in enumerate(records):
        if not 0 <= rec.pc < 1 << 64 or not 0 <= rec.target < 1 << 64:
            raise ValueError(f"Record {i}: address out of 64-bit range")
        if not 0 <= rec.length <= 0xFF:
            raise ValueError(f"Record {i}: length {rec.length} does not fit in a byte")
        array[i] = (rec.pc, rec.target, rec.length, int(rec.branch_class),
                    TAKEN_FLAG if rec.taken else 0)
    return array


def array_to_records(array: np.ndarray) -> List[TraceRecord]:
    """
    Raises:
        TraceFormatError: If a record carries an unknown class code
    """
    bad = np.nonzero(array["class"] > _MAX_CLASS)[0]
    if bad.size:
        raise TraceFormatError(f"Record {int(bad[0])} has unknown class code {int(array['class'][bad[0]])}")
    classes = list(BranchClass)
    return [
        TraceRecord(int(pc), int(target), int(length), classes[cls], bool(flags & TAKEN_FLAG))
        for pc, target, length, cls, flags in zip(
            array["pc"].tolist(), array["target"].tolist(), array["len"].tolist(),
            array["class"].tolist(), array["flags"].tolist(),
        )
    ]


def encode_trace(records: Iterable[TraceRecord]) -> bytes:
    array = records_to_array(records)
    header = np.array([(TRACE_MAGIC, TRACE_VERSION, len(array))], dtype=HEADER_DTYPE)
    return header.tobytes() + array.tobytes()


def decode_trace(data: bytes) -> List[TraceRecord]:
    """
    Parse a complete trace file image.

    Raises:
        TruncatedTraceError: If the header or declared records are incomplete
        BadMagicError: If the magic is not SBTR
        TraceVersionError: If the version is not supported
        TraceFormatError: If bytes follow the declared records
    """
    # Step 1: Header
    if len(data) < HEADER_DTYPE.itemsize:
        if len(data) >= 4 and data[:4] != TRACE_MAGIC:
            raise BadMagicError(f"Bad trace magic {data[:4]!r}")
        raise TruncatedTraceError(f"Trace header needs {HEADER_DTYPE.itemsize} bytes, got {len(data)}")
    header = np.frombuffer(data, dtype=HEADER_DTYPE, count=1)[0]
    if bytes(header["magic"]) != TRACE_MAGIC:
        raise BadMagicError(f"Bad trace magic {bytes(header['magic'])!r}")
    if int(header["version"]) != TRACE_VERSION:
        raise TraceVersionError(f"Unsupported trace version {int(header['version'])}")

    # Step 2: Records
    count = int(header["count"])
    body = data[HEADER_DTYPE.itemsize:]
    expected = count * RECORD_DTYPE.itemsize
    if len(body) < expected:
        raise TruncatedTraceError(
            f"Trace declares {count} records but holds only {len(body) // RECORD_DTYPE.itemsize}"
        )
    if len(body) > expected:
        raise TraceFormatError(f"{len(body) - expected} trailing bytes after {count} records")
    array = np.frombuffer(body, dtype=RECORD_DTYPE, count=count)
    return array_to_records(array)


def write_trace(records: Iterable[TraceRecord], path: Union[str, Path]) -> int:
    """Write records to path. Returns the number of records written."""
    data = encode_trace(records)
    Path(path).write_bytes(data)
    count = (len(data) - HEADER_DTYPE.itemsize) // RECORD_DTYPE.itemsize
    logger.info(f"Wrote {count} trace records to {path}")
    return count


def read_trace(path: Union[str, Path]) -> List[TraceRecord]:
    """
    Raises:
        InputError: If the file does not exist
        TraceFormatError: On any format violation (see decode_trace)
    """
    path = Path(path)
    if not path.exists():
        raise InputError(f"Trace file not found: {path}")
    records = decode_trace(path.read_bytes())
    logger.debug(f"Read {len(records)} trace records from {path}")
    return records
