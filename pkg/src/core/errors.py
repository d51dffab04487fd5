"""
Exception hierarchy for the Skia front-end simulator.

Input problems (bad files, bad parameters) and simulation failures are kept
apart so the command line can map them onto distinct exit codes.
"""

from typing import Optional


class SkiaError(Exception):
    """Base exception for all simulator errors."""
    pass


class ConfigurationError(SkiaError):
    """Exception for invalid or inconsistent simulation configuration."""
    pass


class InputError(SkiaError):
    """Exception for unreadable or malformed input files."""
    pass


class TraceFormatError(InputError):
    """Exception for binary trace files that do not follow the SBTR layout."""
    pass


class BadMagicError(TraceFormatError):
    """Trace file does not start with the SBTR magic."""
    pass


class TruncatedTraceError(TraceFormatError):
    """Trace file ends before the header or the declared records."""
    pass


class TraceVersionError(TraceFormatError):
    """Trace file declares a format version this reader does not support."""
    pass


class CodeImageError(InputError):
    """Exception for malformed code image files or overlapping segments."""
    pass


class UnmappedAddressError(InputError):
    """Exception for reads that fall outside every code image segment."""

    def __init__(self, address: int, message: Optional[str] = None):
        self.address = address
        super().__init__(message or f"Address 0x{address:x} is not mapped by any code segment")


class GeneratorParameterError(SkiaError):
    """Exception for synthetic workload parameters that cannot be laid out."""
    pass


class SimulationError(SkiaError):
    """Exception for fatal inconsistencies detected while simulating."""

    def __init__(self, message: str, pc: Optional[int] = None):
        self.pc = pc
        if pc is not None:
            message = f"{message} (pc=0x{pc:x})"
        super().__init__(message)


class InvariantViolation(SimulationError):
    """Exception for broken internal accounting identities."""
    pass
