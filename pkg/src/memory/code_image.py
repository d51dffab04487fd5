"""
Sparse code image: non-overlapping byte segments in a 64-bit address space.

File format (JSON):
    {"segments": [{"base": "0x400000", "bytes_hex": "9090c3..."}]}
"""

import bisect
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

from pydantic import BaseModel, Field, ValidationError, field_validator

from src.core.errors import CodeImageError, InputError, UnmappedAddressError
from src.shadow.models import LINE_MASK, LINE_SIZE

logger = logging.getLogger(__name__)

INVALID_FILL_BYTE = 0xFF


class SegmentFile(BaseModel):
    """One segment as stored on disk."""
    base: str = Field(..., description="Hex base address, 0x-prefixed")
    bytes_hex: str = Field(..., description="Segment contents as a hex string")

    @field_validator('base')
    @classmethod
    def validate_base(cls, v):
        try:
            value = int(v, 16)
        except ValueError as e:
            raise ValueError(f'Segment base is not a hex address: {v}') from e
        if value < 0 or value >= 1 << 64:
            raise ValueError(f'Segment base out of range: {v}')
        return v

    @field_validator('bytes_hex')
    @classmethod
    def validate_bytes(cls, v):
        try:
            bytes.fromhex(v)
        except ValueError as e:
            raise ValueError('bytes_hex is not a valid hex string') from e
        return v


class CodeImageFile(BaseModel):
    segments: List[SegmentFile] = Field(default_factory=list)


@dataclass
class CodeLayout:
    """
    Ground truth recorded by the workload generator: every instruction start
    and the kind of each function body slot, keyed by pc. Not serialized.
    """
    instruction_starts: frozenset = field(default_factory=frozenset)
    body_slots: Dict[int, str] = field(default_factory=dict)


class CodeImage:
    """
    Ordered map of segments {base address -> bytes}.

    Reads inside a line but past the end of a segment return the invalid
    filler byte so shadow decoding terminates naturally.
    """

    def __init__(self, segments: Optional[Dict[int, bytes]] = None, fill_byte: int = INVALID_FILL_BYTE):
        self.fill_byte = fill_byte
        self._bases: List[int] = []
        self._data: List[bytes] = []
        self.layout: Optional[CodeLayout] = None
        for base, data in sorted((segments or {}).items()):
            self.add_segment(base, data)

    def add_segment(self, base: int, data: bytes) -> None:
        """
        Raises:
            CodeImageError: If the segment is empty or overlaps another
        """
        if not data:
            raise CodeImageError(f"Segment at 0x{base:x} is empty")
        end = base + len(data)
        idx = bisect.bisect_left(self._bases, base)
        if idx > 0 and self._bases[idx - 1] + len(self._data[idx - 1]) > base:
            raise CodeImageError(f"Segment at 0x{base:x} overlaps segment at 0x{self._bases[idx - 1]:x}")
        if idx < len(self._bases) and self._bases[idx] < end:
            raise CodeImageError(f"Segment at 0x{base:x} overlaps segment at 0x{self._bases[idx]:x}")
        self._bases.insert(idx, base)
        self._data.insert(idx, bytes(data))

    @property
    def segments(self) -> List[Tuple[int, bytes]]:
        return list(zip(self._bases, self._data))

    def _segment_at(self, address: int) -> Optional[int]:
        idx = bisect.bisect_right(self._bases, address) - 1
        if idx >= 0 and address < self._bases[idx] + len(self._data[idx]):
            return idx
        return None

    def is_mapped(self, address: int) -> bool:
        return self._segment_at(address) is not None

    def read(self, address: int, size: int) -> bytes:
        """
        Read size bytes, filling unmapped gaps with the fill byte.

        Raises:
            UnmappedAddressError: If no byte of the range is mapped
        """
        out = bytearray([self.fill_byte]) * size
        mapped = False
        end = address + size
        idx = max(bisect.bisect_right(self._bases, address) - 1, 0)
        while idx < len(self._bases) and self._bases[idx] < end:
            seg_base, seg = self._bases[idx], self._data[idx]
            lo, hi = max(address, seg_base), min(end, seg_base + len(seg))
            if lo < hi:
                out[lo - address:hi - address] = seg[lo - seg_base:hi - seg_base]
                mapped = True
            idx += 1
        if not mapped:
            raise UnmappedAddressError(address)
        return bytes(out)

    def read_line(self, line_addr: int) -> bytes:
        """
        Return the 64 bytes of a line.

        Raises:
            ValueError: If line_addr is not 64-byte aligned
            UnmappedAddressError: If the line is fully unmapped
        """
        if line_addr & LINE_MASK:
            raise ValueError(f"Line address 0x{line_addr:x} is not {LINE_SIZE}-byte aligned")
        return self.read(line_addr, LINE_SIZE)

    def to_file_model(self) -> CodeImageFile:
        return CodeImageFile(segments=[
            SegmentFile(base=f"0x{base:x}", bytes_hex=data.hex()) for base, data in self.segments
        ])

    def save(self, path: Union[str, Path]) -> None:
        Path(path).write_text(
            json.dumps(self.to_file_model().model_dump(), indent=2) + "\n", encoding="utf-8"
        )
        logger.info(f"Wrote code image with {len(self._bases)} segments to {path}")

    @classmethod
    def from_file_model(cls, model: CodeImageFile) -> "CodeImage":
        image = cls()
        for seg in model.segments:
            image.add_segment(int(seg.base, 16), bytes.fromhex(seg.bytes_hex))
        return image

    @classmethod
    def load(cls, path: Union[str, Path]) -> "CodeImage":
        """
        Load a code image file.

        Raises:
            InputError: If the file is missing or not valid JSON
            CodeImageError: If the contents are malformed or overlap
        """
        path = Path(path)
        if not path.exists():
            raise InputError(f"Code image not found: {path}")
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
            model = CodeImageFile.model_validate(raw)
        except json.JSONDecodeError as e:
            raise InputError(f"Code image {path} is not valid JSON: {e}") from e
        except ValidationError as e:
            raise CodeImageError(f"Malformed code image {path}: {e}") from e
        image = cls.from_file_model(model)
        logger.debug(f"Loaded {len(image.segments)} segments from {path}")
        return image
